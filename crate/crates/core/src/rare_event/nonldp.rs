//! Paired subsequences for the ball `A^{α,ℓ}`: matched times, where the
//! slow-speed window hits an atom, and mismatched times in between.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{age_statistics, decomposition_log_bound};
use super::estimate::{empirical_at, fit_slope, importance_probability, SlopeEstimate};
use super::event::Event;
use super::scheme::{tilted_sampler, TiltedScheme};
use crate::error::{Error, Result};
use crate::laws::ProbabilityLaw;
use crate::process::simulate_undelayed;
use crate::rng::replica_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonLdpConfig {
    pub alpha: f64,
    pub ell: f64,
    /// Half-width `δ` of the slow-speed window.
    pub delta: f64,
    /// Radius of the ball around `αγ + (1-α) δ₀ ⊗ λ_ℓ`.
    pub radius: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub n_paths: usize,
    /// Direct paths per mismatched time.
    pub n_direct: usize,
    pub seed: u64,
    /// Fixed `δ₁`; calibrated on the control law when absent.
    #[serde(default)]
    pub delta1: Option<f64>,
}

impl Default for NonLdpConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            ell: 0.5,
            delta: 0.05,
            radius: 0.05,
            j_min: 5,
            j_max: 11,
            n_paths: 2000,
            n_direct: 2000,
            seed: 2024,
            delta1: None,
        }
    }
}

impl NonLdpConfig {
    /// `κ` such that the midpoint of `K_t` is `κ/t`.
    pub fn window_center(&self) -> f64 {
        let (a, l, d) = (self.alpha, self.ell, self.delta);
        if a == 0.0 {
            l
        } else {
            0.5 * ((l - d) / (1.0 - a - d) + (l + d) / (1.0 - a + d))
        }
    }

    /// `t_j = κ 2^j`.
    pub fn matched_times(&self) -> Vec<f64> {
        (self.j_min..=self.j_max).map(|j| self.window_center() * 2f64.powi(j)).collect()
    }

    /// `s_j = κ 2^{j+1/2}`.
    pub fn mismatched_times(&self) -> Vec<f64> {
        (self.j_min..=self.j_max)
            .map(|j| self.window_center() * 2f64.powf(j as f64 + 0.5))
            .collect()
    }

    pub fn scheme(&self, t: f64) -> Result<TiltedScheme> {
        if self.alpha == 0.0 {
            TiltedScheme::slow_reentry(self.ell, self.delta, t)
        } else {
            TiltedScheme::ll_plus_slow_reentry(self.alpha, None, self.ell, self.delta, t)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonLdpPoint {
    pub t: f64,
    pub matched: bool,
    pub window: (f64, f64),
    pub window_empty: bool,
    /// Importance-sampling `log P`, absent for an empty window.
    pub is_log_prob: Option<f64>,
    pub is_rel_stderr: Option<f64>,
    pub ess: Option<f64>,
    pub bound_log: f64,
    pub direct_hits: usize,
    pub direct_paths: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonLdpReport {
    pub law: String,
    pub config: NonLdpConfig,
    pub delta1: f64,
    /// `-(1-α) ξ / ℓ`.
    pub target: f64,
    pub points: Vec<NonLdpPoint>,
    pub matched: SlopeEstimate,
    /// Present when every mismatched window is non-empty.
    pub mismatched_is: Option<SlopeEstimate>,
    pub mismatched_bound: SlopeEstimate,
    /// `matched.slope - mismatched_bound.slope`.
    pub slope_gap: f64,
}

impl NonLdpReport {
    /// Whether matched and mismatched importance slopes agree within their
    /// combined 95% interval.
    pub fn slopes_agree(&self) -> Option<bool> {
        let m = self.mismatched_is.as_ref()?;
        let q = 1.96 * (self.matched.slope_stderr.powi(2) + m.slope_stderr.powi(2)).sqrt();
        let width = (self.matched.ci.1 - self.matched.ci.0).max(m.ci.1 - m.ci.0) / 2.0;
        Some((self.matched.slope - m.slope).abs() <= q.max(width))
    }
}

/// Largest `|S_{N_t}/t - α|`, `|(t - S_{N_t})/τ_{N_t+1} - ℓ|` over sampled
/// paths in the ball, rounded up to a multiple of `0.05`.
pub fn calibrate_delta1(phi: &ProbabilityLaw, cfg: &NonLdpConfig) -> Result<f64> {
    let event = Event::a_ball(phi, cfg.alpha, cfg.ell, cfg.radius)?;
    let mut worst: f64 = 0.0;
    let times: Vec<f64> = cfg.matched_times().into_iter().chain(cfg.mismatched_times()).collect();
    for (k, &t) in times.iter().enumerate() {
        let scheme = cfg.scheme(t)?;
        let devs: Result<Vec<f64>> = (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(cfg.seed ^ 0xca11b, (k * cfg.n_paths + i) as u64);
                let path = match tilted_sampler(&scheme, phi, &mut rng) {
                    Ok(s) => s.path,
                    Err(Error::EmptyWindow { .. }) => simulate_undelayed(t, phi, &mut rng),
                    Err(e) => return Err(e),
                };
                let m = empirical_at(&path, t)?;
                if !event.contains(&m) {
                    return Ok(0.0);
                }
                let (a, r) = age_statistics(&path, t);
                Ok((a - cfg.alpha).abs().max((r - cfg.ell).abs()))
            })
            .collect();
        worst = devs?.into_iter().fold(worst, f64::max);
    }
    Ok(((worst / 0.05).ceil() * 0.05).max(0.05))
}

/// Runs the experiment for `phi`. `xi` sets the reported target.
pub fn non_ldp_experiment(phi: &ProbabilityLaw, xi: f64, cfg: &NonLdpConfig, delta1: f64) -> Result<NonLdpReport> {
    let event = Event::a_ball(phi, cfg.alpha, cfg.ell, cfg.radius)?;
    let beta = cfg.alpha + delta1;
    let h = cfg.ell + delta1;
    let mut points = Vec::new();
    let all: Vec<(f64, bool)> = cfg
        .matched_times()
        .into_iter()
        .map(|t| (t, true))
        .chain(cfg.mismatched_times().into_iter().map(|t| (t, false)))
        .collect();
    for (k, &(t, matched)) in all.iter().enumerate() {
        let scheme = cfg.scheme(t)?;
        let window = scheme.window().expect("tilted scheme");
        let window_empty = phi.log_mass_in(window.0, window.1) == f64::NEG_INFINITY;
        let seed = cfg.seed.wrapping_add(k as u64 * 1_000_003);
        let (is_log_prob, is_rel_stderr, ess) = if window_empty {
            (None, None, None)
        } else {
            let e = importance_probability(&event, &scheme, cfg.n_paths, phi, seed)?;
            (Some(e.log_estimate), Some(e.rel_stderr), Some(e.ess))
        };
        let (direct_hits, direct_paths) = if matched {
            (0, 0)
        } else {
            let hits: Result<Vec<bool>> = (0..cfg.n_direct)
                .into_par_iter()
                .map(|i| {
                    let mut rng = replica_rng(seed ^ 0xd1ec7, i as u64);
                    let path = simulate_undelayed(t, phi, &mut rng);
                    Ok(event.contains(&empirical_at(&path, t)?))
                })
                .collect();
            (hits?.into_iter().filter(|b| *b).count(), cfg.n_direct)
        };
        points.push(NonLdpPoint {
            t,
            matched,
            window,
            window_empty,
            is_log_prob,
            is_rel_stderr,
            ess,
            bound_log: decomposition_log_bound(phi, t, beta, h)?,
            direct_hits,
            direct_paths,
        });
    }
    let fit_is = |matched: bool, tag: &str| -> Result<Option<SlopeEstimate>> {
        let sel: Vec<&NonLdpPoint> = points.iter().filter(|p| p.matched == matched).collect();
        if sel.iter().any(|p| p.is_log_prob.is_none_or(|x| !x.is_finite())) {
            return Ok(None);
        }
        let ts: Vec<f64> = sel.iter().map(|p| p.t).collect();
        let ys: Vec<f64> = sel.iter().map(|p| p.is_log_prob.expect("checked")).collect();
        let se: Vec<f64> = sel.iter().map(|p| p.is_rel_stderr.expect("checked")).collect();
        fit_slope(tag, &ts, &ys, &se).map(Some)
    };
    let matched = fit_is(true, "importance")?.ok_or_else(|| {
        Error::InvalidParameter("a matched window carries no mass or no sample hit the ball".into())
    })?;
    let mismatched_is = fit_is(false, "importance")?;
    let mm: Vec<&NonLdpPoint> = points.iter().filter(|p| !p.matched).collect();
    let ts: Vec<f64> = mm.iter().map(|p| p.t).collect();
    let ys: Vec<f64> = mm.iter().map(|p| p.bound_log).collect();
    let mismatched_bound = fit_slope("analytic bound", &ts, &ys, &vec![0.0; ts.len()])?;
    Ok(NonLdpReport {
        law: phi.name().to_string(),
        config: cfg.clone(),
        delta1,
        target: -(1.0 - cfg.alpha) * xi / cfg.ell,
        slope_gap: matched.slope - mismatched_bound.slope,
        points,
        matched,
        mismatched_is,
        mismatched_bound,
    })
}
