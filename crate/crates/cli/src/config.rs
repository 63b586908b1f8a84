//! Experiment configuration read from TOML.

use std::fmt;
use std::path::Path;

use hotwall_core::laws::LawSpec;
use hotwall_core::rare_event::{EventSpec, NonLdpConfig, TiltMode, TiltedScheme};
use hotwall_core::ProbabilityLaw;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; every file goes under it.
    #[serde(default = "default_out")]
    pub out_dir: String,
    pub law: LawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rare: Option<RareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonldp: Option<NonLdpSection>,
}

fn default_out() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Delayed start `(q0, p0)`; undelayed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<[f64; 2]>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    #[serde(default = "default_q_bins")]
    pub q_bins: usize,
    pub p_edges: Vec<f64>,
    /// Fails the run when the mean BL distance at the last time exceeds it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lln_tolerance: Option<f64>,
}

fn default_q_bins() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    /// Simplex step for `(α₁, α₂, α₃)`.
    pub alpha_step: f64,
    pub ells: Vec<f64>,
    /// Moving part; the invariant law `π̃ = φ` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<LawSpec>,
    #[serde(default = "default_xi_tol")]
    pub xi_tol: f64,
}

fn default_xi_tol() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub mode: TiltMode,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "half")]
    pub ell: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_tilde: Option<LawSpec>,
}

fn half() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    0.05
}

impl SchemeSpec {
    pub fn build(&self, t: f64) -> hotwall_core::Result<TiltedScheme> {
        match self.mode {
            TiltMode::NoTilt => Ok(TiltedScheme::no_tilt(t)),
            TiltMode::SlowReentryOnly => TiltedScheme::slow_reentry(self.ell, self.delta, t),
            TiltMode::LlPlusSlowReentry => {
                let pt = self.pi_tilde.as_ref().map(|s| s.build()).transpose()?;
                TiltedScheme::ll_plus_slow_reentry(self.alpha, pt, self.ell, self.delta, t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub c: f64,
    pub delta: f64,
    pub m: f64,
    /// `g ≡ log a`.
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RareConfig {
    pub event: EventSpec,
    pub scheme: SchemeSpec,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    /// Also run the untilted estimator on the same grid.
    #[serde(default)]
    pub direct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tightness: Option<TightnessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_energy: Option<FreeEnergySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TightnessSpec {
    pub t_grid: Vec<f64>,
    pub levels: Vec<f64>,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeEnergySpec {
    pub fixtures: Vec<FixtureSpec>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonLdpSection {
    #[serde(flatten)]
    pub experiment: NonLdpConfig,
    /// Law with `ξ = ξ̄` run through the same pipeline, also used to
    /// calibrate `δ₁`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<LawSpec>,
    /// Relative tolerance on the matched slope.
    #[serde(default = "default_slope_tol")]
    pub slope_tolerance: f64,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
}

fn default_slope_tol() -> f64 {
    0.2
}

fn default_min_gap() -> f64 {
    0.5
}

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level for an empty section).
pub fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        let k = line.split('=').next().unwrap_or("").trim();
        if current == section && k == key {
            return Some(i + 1);
        }
    }
    None
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(src).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of_offset(src, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&src)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn phi(&self) -> hotwall_core::Result<ProbabilityLaw> {
        self.law.build()
    }

    /// Semantic checks, reported at the offending key's line.
    fn validate(&self, src: &str) -> Result<(), ConfigError> {
        let err = |section: &str, key: &str, message: String| ConfigError {
            line: locate(src, section, key).or_else(|| locate(src, section, "")),
            message,
        };
        if let Err(e) = self.law.build() {
            return Err(err("law", "kind", format!("invalid law: {e}")));
        }
        if Path::new(&self.out_dir).is_absolute() {
            return Err(err("", "out_dir", "out_dir must be relative".into()));
        }
        let grid_ok = |g: &[f64]| !g.is_empty() && g.iter().all(|t| t.is_finite() && *t > 0.0);
        if let Some(s) = &self.simulate {
            if !grid_ok(&s.t_grid) {
                return Err(err("simulate", "t_grid", "t_grid needs positive finite times".into()));
            }
            if s.replicas == 0 {
                return Err(err("simulate", "replicas", "replicas must be positive".into()));
            }
            if s.q_bins == 0 {
                return Err(err("simulate", "q_bins", "q_bins must be positive".into()));
            }
            if s.p_edges.len() < 2 || s.p_edges.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(err("simulate", "p_edges", "p_edges must be increasing, at least two".into()));
            }
            if let Some([q0, p0]) = s.initial {
                if !(0.0..1.0).contains(&q0) || !(p0 > 0.0) {
                    return Err(err("simulate", "initial", "initial needs q0 ∈ [0,1), p0 > 0".into()));
                }
            }
        }
        if let Some(r) = &self.rates {
            if !(r.alpha_step > 0.0 && r.alpha_step <= 1.0) {
                return Err(err("rates", "alpha_step", "alpha_step must lie in (0, 1]".into()));
            }
            if r.ells.is_empty() || r.ells.iter().any(|l| !(0.0..1.0).contains(l)) {
                return Err(err("rates", "ells", "ells must lie in [0, 1)".into()));
            }
            if let Some(Err(e)) = r.pi.as_ref().map(|p| p.build()) {
                return Err(err("rates.pi", "", format!("invalid law: {e}")));
            }
        }
        if let Some(r) = &self.rare {
            if !grid_ok(&r.t_grid) {
                return Err(err("rare", "t_grid", "t_grid needs positive finite times".into()));
            }
            if r.replicas == 0 {
                return Err(err("rare", "replicas", "replicas must be positive".into()));
            }
            if let Err(e) = r.scheme.build(r.t_grid[0]) {
                return Err(err("rare.scheme", "mode", format!("invalid scheme: {e}")));
            }
            if let Ok(phi) = self.phi() {
                if let Err(e) = r.event.build(&phi) {
                    return Err(err("rare.event", "kind", format!("invalid event: {e}")));
                }
            }
        }
        if let Some(n) = &self.nonldp {
            let e = &n.experiment;
            if e.j_min > e.j_max {
                return Err(err("nonldp", "j_max", "j_max must be at least j_min".into()));
            }
            if e.n_paths == 0 {
                return Err(err("nonldp", "n_paths", "n_paths must be positive".into()));
            }
            if let Err(x) = e.scheme(1.0) {
                return Err(err("nonldp", "delta", format!("invalid window: {x}")));
            }
            if let Some(Err(x)) = n.control.as_ref().map(|c| c.build()) {
                return Err(err("nonldp.control", "", format!("invalid control law: {x}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3

[law]
kind = "atomic"
atoms = [[1.0, 1.0]]

[simulate]
t_grid = [10.0, 100.0]
replicas = 4
p_edges = [0.0, 2.0]
"#;

    #[test]
    fn round_trip() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let b = ExperimentConfig::parse(&a.emit()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.emit(), b.emit());
    }

    #[test]
    fn semantic_error_points_at_key() {
        let bad = MINIMAL.replace("replicas = 4", "replicas = 0");
        let e = ExperimentConfig::parse(&bad).unwrap_err();
        assert_eq!(e.line, Some(10));
    }

    #[test]
    fn syntax_error_has_line() {
        let bad = MINIMAL.replace("replicas = 4", "replicas = ");
        let e = ExperimentConfig::parse(&bad).unwrap_err();
        assert_eq!(e.line, Some(10));
    }

    #[test]
    fn missing_seed_is_rejected() {
        let bad = MINIMAL.replace("seed = 3", "");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }
}
