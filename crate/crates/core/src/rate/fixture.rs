//! Test functions `f(r, p) = p g(p) + c 1[p < δ] 1[r < m] / m` and their
//! membership constants `C_f`, `D_f`.

use serde::Serialize;

use super::omega::OmegaMeasure;
use super::variational::{Candidate, SpeedFn};
use crate::empirical::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::laws::{log_expectation_exp, ProbabilityLaw, Repr};
use crate::numerics::log_sum_exp;
use crate::scalar::ExtendedReal;

#[derive(Clone)]
pub struct LambdaFixture {
    pub c: f64,
    pub delta: f64,
    pub m: f64,
    pub g: Candidate,
    /// `φ(e^{f̄(1,v)/v})`.
    pub c_f: f64,
    /// `sup_s ∫_{(0,1/s]} φ(dv) e^{s f̄(sv,v)}`.
    pub d_f: f64,
    /// `false` when `D_f` comes from a grid in `s` rather than breakpoints.
    pub d_f_exact: bool,
}

impl std::fmt::Debug for LambdaFixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LambdaFixture")
            .field("c", &self.c)
            .field("delta", &self.delta)
            .field("m", &self.m)
            .field("g", &self.g.name)
            .field("c_f", &self.c_f)
            .field("d_f", &self.d_f)
            .finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureSummary {
    pub c: f64,
    pub delta: f64,
    pub m: f64,
    pub g: String,
    pub c_f: f64,
    pub d_f: f64,
    pub d_f_exact: bool,
    pub bound: f64,
}

/// `s f̄(sv, v)` for `sv ≤ 1`.
fn scaled_mean_exponent(g: &SpeedFn, c: f64, delta: f64, m: f64, s: f64, v: f64) -> f64 {
    let slow = if v < delta { c * (s / m).min(1.0 / v) } else { 0.0 };
    s * v * g(v) + slow
}

fn d_f_atomic(phi: &ProbabilityLaw, g: &SpeedFn, c: f64, delta: f64, m: f64) -> f64 {
    let a = phi.as_atomic().expect("atomic");
    let pts: Vec<(f64, f64)> = a.points().collect();
    let mut best = 0.0f64; // log of the s → 0 limit
    for &(v, _) in &pts {
        for s in [1.0 / v, m / v] {
            let terms = pts
                .iter()
                .filter(|(u, _)| *u <= 1.0 / s)
                .map(|&(u, lw)| lw + scaled_mean_exponent(g, c, delta, m, s, u));
            best = best.max(log_sum_exp(terms));
        }
    }
    best.exp()
}

fn d_f_grid(phi: &ProbabilityLaw, g: &SpeedFn, c: f64, delta: f64, m: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for k in 0..=320 {
        let s = 10f64.powf(-2.0 + 8.0 * k as f64 / 320.0);
        let h = |v: f64| {
            if v <= 1.0 / s {
                scaled_mean_exponent(g, c, delta, m, s, v)
            } else {
                f64::NEG_INFINITY
            }
        };
        best = best.max(log_expectation_exp(phi, &h)?);
    }
    Ok(best.exp())
}

/// Builds the fixture and certifies `C_f < 1`, `D_f < ∞` and `c < ξ`.
pub fn test_function_fixture(
    c: f64,
    delta: f64,
    m: f64,
    g: Candidate,
    phi: &ProbabilityLaw,
    xi: &ExtendedReal,
) -> Result<LambdaFixture> {
    if !(m > 0.0 && m < 1.0) || !(delta > 0.0) || !(c >= 0.0) {
        return Err(Error::InvalidParameter("need m ∈ (0,1), δ > 0, c ≥ 0".into()));
    }
    if c > 0.0 && ExtendedReal::Finite(c) >= *xi {
        return Err(Error::NotInLambda(format!("c = {c} is not below ξ = {xi}")));
    }
    let gf = g.g.clone();
    let log_c = log_expectation_exp(phi, &|v| gf(v) + if v < delta { c / v } else { 0.0 })?;
    let c_f = log_c.exp();
    if !(c_f < 1.0) {
        return Err(Error::NotInLambda(format!("C_f = {c_f} ≥ 1")));
    }
    let (d_f, d_f_exact) = match phi.repr() {
        Repr::Atomic(_) => (d_f_atomic(phi, &g.g, c, delta, m), true),
        _ => (d_f_grid(phi, &g.g, c, delta, m)?, false),
    };
    if !d_f.is_finite() {
        return Err(Error::NotInLambda("D_f diverges".into()));
    }
    Ok(LambdaFixture {
        c,
        delta,
        m,
        g,
        c_f,
        d_f,
        d_f_exact,
    })
}

impl LambdaFixture {
    pub fn eval(&self, r: f64, p: f64) -> f64 {
        let slow = if p < self.delta && r < self.m { self.c / self.m } else { 0.0 };
        p * (self.g.g)(p) + slow
    }

    /// Average of `f(·, p)` over `[lo, hi)`, or `f(lo, p)` when `lo = hi`.
    pub fn q_average(&self, lo: f64, hi: f64, p: f64) -> f64 {
        if hi <= lo {
            return self.eval(lo, p);
        }
        let frac = if p < self.delta {
            (hi.min(self.m) - lo).max(0.0) / (hi - lo)
        } else {
            0.0
        };
        p * (self.g.g)(p) + self.c / self.m * frac
    }

    /// `f̄(q, v)`.
    pub fn fbar(&self, q: f64, v: f64) -> f64 {
        self.q_average(0.0, q, v)
    }

    /// `∫ f dμ`, exact on the mixture representation.
    pub fn integrate_measure(&self, mu: &EmpiricalMeasure<f64>) -> f64 {
        mu.components()
            .iter()
            .map(|c| c.weight * self.q_average(c.q_lo, c.q_hi, c.momentum))
            .sum()
    }

    pub fn integrate_omega(&self, mu: &OmegaMeasure) -> Result<f64> {
        Ok(self.integrate_measure(&mu.to_empirical()?))
    }

    /// `D_f / (1 - C_f)`.
    pub fn free_energy_bound(&self) -> f64 {
        self.d_f / (1.0 - self.c_f)
    }

    pub fn summary(&self) -> FixtureSummary {
        FixtureSummary {
            c: self.c,
            delta: self.delta,
            m: self.m,
            g: self.g.name.clone(),
            c_f: self.c_f,
            d_f: self.d_f,
            d_f_exact: self.d_f_exact,
            bound: self.free_energy_bound(),
        }
    }
}

/// `g ≡ log a`.
pub fn constant_tilt(a: f64) -> Candidate {
    let la = a.ln();
    Candidate::new(format!("log {a}"), std::sync::Arc::new(move |_| la))
}
