//! Analytic bounds: exponential tightness, free energy, and the
//! decomposition bound for the (age, residual) constraint.

use rayon::prelude::*;
use serde::Serialize;

use super::estimate::{direct_probability, empirical_at, ProbabilityEstimate};
use super::event::Event;
use crate::error::{Error, Result};
use crate::laws::{expectation, log_expectation_exp, speed_to_interarrival, ProbabilityLaw};
use crate::numerics::mean_stderr;
use crate::process::{simulate_undelayed, Trajectory};
use crate::rate::LambdaFixture;
use crate::rng::replica_rng;

/// `log c` with `c⁻¹ = φ(e^{-1/v})`.
pub fn tightness_log_c(phi: &ProbabilityLaw) -> Result<f64> {
    Ok(-log_expectation_exp(phi, &|v| -1.0 / v)?)
}

/// `e^{t - ⌊tM⌋ log c}`, a bound on `P(μ̄_t(p) ≥ M)`.
pub fn tightness_bound(m: f64, t: f64, phi: &ProbabilityLaw) -> Result<f64> {
    if !(m > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("need M, t > 0".into()));
    }
    Ok((t - (t * m).floor() * tightness_log_c(phi)?).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheckRow {
    pub t: f64,
    pub parameter: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `estimate ≤ bound + 3 stderr`.
    pub ok: bool,
}

/// Monte Carlo `P(μ̄_t(p) > M)` against [`tightness_bound`] on a grid.
pub fn tightness_check(phi: &ProbabilityLaw, ts: &[f64], ms: &[f64], n_paths: usize, seed: u64) -> Result<Vec<BoundCheckRow>> {
    let mut rows = Vec::new();
    for &t in ts {
        for &m in ms {
            let e = direct_probability(&Event::MeanMomentumExceeds(m), t, n_paths, phi, seed)?;
            let bound = tightness_bound(m, t, phi)?;
            rows.push(BoundCheckRow {
                t,
                parameter: m,
                estimate: e.estimate,
                stderr: e.stderr,
                bound,
                ok: e.estimate <= bound + 3.0 * e.stderr,
            });
        }
    }
    Ok(rows)
}

/// Monte Carlo `E[e^{t μ̄_t(f)}]` against `D_f / (1 - C_f)`.
pub fn free_energy_check(
    f: &LambdaFixture,
    phi: &ProbabilityLaw,
    ts: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<BoundCheckRow>> {
    let bound = f.free_energy_bound();
    let mut rows = Vec::new();
    for &t in ts {
        let vals: Result<Vec<f64>> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i as u64);
                let path = simulate_undelayed(t, phi, &mut rng);
                let m = empirical_at(&path, t)?;
                Ok((t * f.integrate_measure(&m)).exp())
            })
            .collect();
        let (mean, se) = mean_stderr(&vals?);
        rows.push(BoundCheckRow {
            t,
            parameter: f.c,
            estimate: mean,
            stderr: se,
            bound,
            ok: mean <= bound + 3.0 * se,
        });
    }
    Ok(rows)
}

/// `log ψ([x, ∞)) = log φ((0, 1/x])`.
pub fn log_interarrival_tail(phi: &ProbabilityLaw, x: f64) -> f64 {
    phi.log_cdf_closed(1.0 / x)
}

/// Upper bound on `E N_u`: `⌊u/τ_min⌋` for atomic laws, Lorden's
/// `u/E τ + E τ²/(E τ)²` otherwise.
pub fn renewal_mean_bound(phi: &ProbabilityLaw, u: f64) -> Result<f64> {
    if let Some(a) = phi.as_atomic() {
        let vmax = a.atoms().into_iter().fold(0.0, f64::max);
        return Ok((u * vmax).floor());
    }
    let psi = speed_to_interarrival(phi);
    let m1 = expectation(&psi, &|x| x)?;
    let m2 = expectation(&psi, &|x| x * x)?;
    match (m1.finite(), m2.finite()) {
        (Some(m1), Some(m2)) => Ok(u / m1 + m2 / (m1 * m1)),
        _ => Err(Error::InfiniteMean),
    }
}

/// `log[ψ([(1-β)t/h, ∞)) (1 + E N_{βt})]`, bounding
/// `log P(S_{N_t} ≤ βt, (t - S_{N_t})/τ_{N_t+1} ≤ h)`.
pub fn decomposition_log_bound(phi: &ProbabilityLaw, t: f64, beta: f64, h: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) || !(h > 0.0) {
        return Err(Error::InvalidParameter("need β ∈ [0,1), h > 0".into()));
    }
    let tail = log_interarrival_tail(phi, (1.0 - beta) * t / h);
    Ok(tail + (1.0 + renewal_mean_bound(phi, beta * t)?).ln())
}

/// `S_{N_t} ≤ βt` and `(t - S_{N_t})/τ_{N_t+1} ≤ h` along an undelayed path.
pub fn in_decomposition_event(path: &Trajectory<f64>, t: f64, beta: f64, h: f64) -> bool {
    let (s, n) = path.renewal_counts(&t);
    let tau = path.durations()[n];
    s <= beta * t && (t - s) / tau <= h
}

/// `(S_{N_t}/t, (t - S_{N_t})/τ_{N_t+1})`.
pub fn age_statistics(path: &Trajectory<f64>, t: f64) -> (f64, f64) {
    let (s, n) = path.renewal_counts(&t);
    (s / t, (t - s) / path.durations()[n])
}

/// Monte Carlo probability of the decomposition event.
pub fn decomposition_probability(
    phi: &ProbabilityLaw,
    t: f64,
    beta: f64,
    h: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    let hits: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let path = simulate_undelayed(t, phi, &mut rng);
            if in_decomposition_event(&path, t, beta, h) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let (m, se) = mean_stderr(&hits.iter().map(|w| w.exp()).collect::<Vec<_>>());
    Ok(ProbabilityEstimate {
        estimate: m,
        stderr: se,
        log_estimate: m.ln(),
        rel_stderr: se / m,
        hits: hits.iter().filter(|w| **w == 0.0).count(),
        n_paths,
        ess: n_paths as f64,
        degenerate_ess: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_speed_tightness_closed_form() {
        let phi = ProbabilityLaw::dirac(1.0).unwrap();
        let b = tightness_bound(2.0, 10.0, &phi).unwrap();
        assert!((b.ln() - (10.0 - 20.0)).abs() < 1e-12);
        assert!(tightness_bound(50.0, 10.0, &phi).unwrap() < 1e-200);
    }

    #[test]
    fn decomposition_bound_holds_two_atoms() {
        let phi = ProbabilityLaw::atomic(&[(0.2, 0.3), (1.0, 0.7)]).unwrap();
        for (t, beta, h) in [(6.0, 0.5, 0.9), (10.0, 0.3, 0.8), (4.0, 0.2, 0.5)] {
            let e = decomposition_probability(&phi, t, beta, h, 20_000, 1).unwrap();
            let b = decomposition_log_bound(&phi, t, beta, h).unwrap().exp();
            assert!(e.estimate <= b + 3.0 * e.stderr, "{t}: {} > {b}", e.estimate);
        }
    }
}
