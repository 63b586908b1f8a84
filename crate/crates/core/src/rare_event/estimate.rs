//! Direct and importance-sampling estimates of `P(μ̄_t ∈ A)`, and slope fits.

use rayon::prelude::*;
use serde::Serialize;

use super::event::Event;
use super::scheme::{tilted_sampler, TiltedScheme};
use crate::empirical::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::laws::ProbabilityLaw;
use crate::numerics::{log_sum_exp, mean_stderr, student_t_quantile};
use crate::process::simulate_undelayed;
use crate::rng::replica_rng;

/// Below this effective sample size an importance estimate is flagged.
pub const ESS_WARNING: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `log estimate`, finite even when `estimate` underflows.
    pub log_estimate: f64,
    /// `stderr / estimate`.
    pub rel_stderr: f64,
    pub hits: usize,
    pub n_paths: usize,
    pub ess: f64,
    pub degenerate_ess: bool,
}

impl ProbabilityEstimate {
    fn from_log_weights(logw: &[f64], n: usize) -> Self {
        let hits = logw.iter().filter(|w| **w > f64::NEG_INFINITY).count();
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Self {
                estimate: 0.0,
                stderr: 0.0,
                log_estimate: f64::NEG_INFINITY,
                rel_stderr: f64::INFINITY,
                hits: 0,
                n_paths: n,
                ess: 0.0,
                degenerate_ess: true,
            };
        }
        let scaled: Vec<f64> = logw.iter().map(|w| (w - top).exp()).collect();
        let (m, se) = mean_stderr(&scaled);
        let s1: f64 = scaled.iter().sum();
        let s2: f64 = scaled.iter().map(|w| w * w).sum();
        let ess = s1 * s1 / s2;
        let log_estimate = log_sum_exp(logw.iter().copied()) - (n as f64).ln();
        Self {
            estimate: log_estimate.exp(),
            stderr: (top + se.ln()).exp(),
            log_estimate,
            rel_stderr: se / m,
            hits,
            n_paths: n,
            ess,
            degenerate_ess: ess < ESS_WARNING,
        }
    }
}

/// `μ̄_t` of an undelayed path.
pub fn empirical_at(path: &crate::process::Trajectory<f64>, t: f64) -> Result<EmpiricalMeasure<f64>> {
    EmpiricalMeasure::from_trajectory(path, &t)
}

/// Indicator average over `n_paths` undelayed paths under `φ`.
pub fn direct_probability(event: &Event, t: f64, n_paths: usize, phi: &ProbabilityLaw, seed: u64) -> Result<ProbabilityEstimate> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive".into()));
    }
    let logw: Result<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let path = simulate_undelayed(t, phi, &mut rng);
            let m = empirical_at(&path, t)?;
            Ok(if event.contains(&m) { 0.0 } else { f64::NEG_INFINITY })
        })
        .collect();
    let mut est = ProbabilityEstimate::from_log_weights(&logw?, n_paths);
    est.degenerate_ess = false;
    Ok(est)
}

/// Unbiased estimate of `P(A ∩ {dQ/dP > 0})` from paths under the scheme,
/// weighted by `dP/dQ`. No self-normalisation.
pub fn importance_probability(
    event: &Event,
    scheme: &TiltedScheme,
    n_paths: usize,
    phi: &ProbabilityLaw,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    let (est, _) = importance_with_costs(event, scheme, n_paths, phi, seed)?;
    Ok(est)
}

/// As [`importance_probability`], also returning `-log(dP/dQ)` per path.
pub fn importance_with_costs(
    event: &Event,
    scheme: &TiltedScheme,
    n_paths: usize,
    phi: &ProbabilityLaw,
    seed: u64,
) -> Result<(ProbabilityEstimate, Vec<f64>)> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive".into()));
    }
    let t = scheme.t;
    let pairs: Result<Vec<(f64, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let s = tilted_sampler(scheme, phi, &mut rng)?;
            let m = empirical_at(&s.path, t)?;
            let w = if event.contains(&m) { s.log_lr } else { f64::NEG_INFINITY };
            Ok((w, -s.log_lr))
        })
        .collect();
    let (logw, costs): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
    Ok((ProbabilityEstimate::from_log_weights(&logw, n_paths), costs))
}

/// Weighted least-squares slope of `log p̂_t` against `t`.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeEstimate {
    pub estimator: String,
    pub t_grid: Vec<f64>,
    pub log_prob: Vec<f64>,
    pub log_stderr: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% interval.
    pub ci: (f64, f64),
}

impl SlopeEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci.0 <= x && x <= self.ci.1
    }
}

/// Per-point variance floor, so exact points do not get infinite weight.
const VAR_FLOOR: f64 = 1e-12;

/// Fits `log p = a + b t` with weights `1/σ²`. The slope error is scaled by
/// the reduced χ² when that exceeds one.
pub fn fit_slope(estimator: &str, ts: &[f64], logp: &[f64], log_se: &[f64]) -> Result<SlopeEstimate> {
    let n = ts.len();
    if n < 3 || logp.len() != n || log_se.len() != n {
        return Err(Error::InvalidParameter("need at least three finite points".into()));
    }
    if logp.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("log-probabilities must be finite".into()));
    }
    let w: Vec<f64> = log_se.iter().map(|s| 1.0 / (s * s).max(VAR_FLOOR)).collect();
    let sw: f64 = w.iter().sum();
    let tbar = w.iter().zip(ts).map(|(w, t)| w * t).sum::<f64>() / sw;
    let ybar = w.iter().zip(logp).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(ts).map(|(w, t)| w * (t - tbar).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (ts[i] - tbar) * (logp[i] - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * tbar;
    let chi2: f64 = (0..n).map(|i| w[i] * (logp[i] - intercept - slope * ts[i]).powi(2)).sum();
    let scale = (chi2 / (n - 2) as f64).max(1.0);
    let se = (scale / sxx).sqrt();
    let q = student_t_quantile(0.975, (n - 2) as f64);
    Ok(SlopeEstimate {
        estimator: estimator.to_string(),
        t_grid: ts.to_vec(),
        log_prob: logp.to_vec(),
        log_stderr: log_se.to_vec(),
        slope,
        intercept,
        slope_stderr: se,
        ci: (slope - q * se, slope + q * se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_true_event() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let e = direct_probability(&Event::Always, 3.0, 100, &phi, 0).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        let e = direct_probability(&Event::MeanMomentumExceeds(0.0), 3.0, 100, &phi, 0).unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn no_tilt_matches_direct() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let ev = Event::MeanMomentumExceeds(1.6);
        let d = direct_probability(&ev, 5.0, 4000, &phi, 7).unwrap();
        let i = importance_probability(&ev, &TiltedScheme::no_tilt(5.0), 4000, &phi, 7).unwrap();
        assert_eq!(d.estimate, i.estimate);
    }

    #[test]
    fn exact_line() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = ts.iter().map(|t| 0.5 - 2.0 * t).collect();
        let f = fit_slope("exact", &ts, &y, &[0.0; 4]).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && f.contains(-2.0));
    }
}
