//! Monte Carlo checks of the semigroup property and of the generator
//! `Lf = p ∂f/∂q` with the wall boundary condition `f(1, p) = φ(f(0, ·))`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::trajectory::{simulate, Trajectory};
use crate::error::{Error, Result};
use crate::laws::{expectation, ProbabilityLaw, Repr};
use crate::numerics::{gauss_legendre, mean_stderr};
use crate::rng::replica_rng;

pub type StateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Bounded test function with its `q`-derivative.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub f: StateFn,
    pub dfdq: StateFn,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    pub fn new(name: impl Into<String>, f: StateFn, dfdq: StateFn) -> Self {
        Self {
            name: name.into(),
            f,
            dfdq,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), Arc::new(move |_, _| c), Arc::new(|_, _| 0.0))
    }

    pub fn sin_2pi_q() -> Self {
        use std::f64::consts::TAU;
        Self::new(
            "sin(2πq)",
            Arc::new(|q, _| (TAU * q).sin()),
            Arc::new(|q, _| TAU * (TAU * q).cos()),
        )
    }

    pub fn cos_2pi_q() -> Self {
        use std::f64::consts::TAU;
        Self::new(
            "cos(2πq)",
            Arc::new(|q, _| (TAU * q).cos()),
            Arc::new(|q, _| -TAU * (TAU * q).sin()),
        )
    }

    /// `(1 - q) g(p) + q φ(g)`, which meets the boundary condition for `φ`.
    pub fn interpolating(name: impl Into<String>, g: Arc<dyn Fn(f64) -> f64 + Send + Sync>, phi: &ProbabilityLaw) -> Result<Self> {
        let gg = g.clone();
        let mean = expectation(phi, &move |v| gg(v))?
            .finite()
            .copied()
            .ok_or_else(|| Error::InvalidParameter("φ(g) diverges".into()))?;
        let g2 = g.clone();
        Ok(Self::new(
            name,
            Arc::new(move |q, p| (1.0 - q) * g(p) + q * mean),
            Arc::new(move |_, p| mean - g2(p)),
        ))
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        (self.f)(q, p)
    }

    /// Largest `|f(1, p) - φ(f(0, ·))|` over a probe grid of speeds.
    pub fn boundary_residual(&self, phi: &ProbabilityLaw) -> Result<(f64, f64)> {
        let f = self.f.clone();
        let at_wall = expectation(phi, &move |v| f(0.0, v))?
            .finite()
            .copied()
            .ok_or_else(|| Error::InvalidParameter("φ(f(0, ·)) diverges".into()))?;
        let probes: Vec<f64> = match phi.repr() {
            Repr::Atomic(a) => a.atoms(),
            _ => (-12..=12).map(|k| 2f64.powf(k as f64 / 2.0)).collect(),
        };
        let mut worst = (f64::NAN, 0.0);
        for p in probes {
            let r = (self.eval(1.0, p) - at_wall).abs();
            if !(r <= worst.1) {
                worst = (p, r);
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Deterministic error allowance (quadrature, rounding).
    pub tolerance: f64,
}

impl ResidualReport {
    /// `residual ≤ k·stderr + tolerance`.
    pub fn within(&self, k: f64) -> bool {
        self.residual <= k * self.stderr + self.tolerance
    }
}

/// `|Ê f(X_{t+s}) - Ê (P̂_s f)(X_t)|` from `x0`, with the outer paths shared
/// by both sides and `n_inner` fresh continuations from each `X_t`.
#[allow(clippy::too_many_arguments)]
pub fn semigroup_residual(
    f: &TestFunction,
    phi: &ProbabilityLaw,
    x0: (f64, f64),
    t: f64,
    s: f64,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<ResidualReport> {
    if n_outer == 0 || n_inner == 0 || t < 0.0 || s < 0.0 {
        return Err(Error::InvalidParameter("need n ≥ 1 and t, s ≥ 0".into()));
    }
    let diffs: Result<Vec<f64>> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let path = simulate(x0.0, x0.1, t + s, phi, &mut rng)?;
            let end = path.evaluate(&(t + s))?;
            let mid = path.evaluate(&t)?;
            let mut inner = 0.0;
            for _ in 0..n_inner {
                let cont = simulate(mid.q, mid.p, s, phi, &mut rng)?;
                let x = cont.evaluate(&s)?;
                inner += f.eval(x.q, x.p);
            }
            Ok(f.eval(end.q, end.p) - inner / n_inner as f64)
        })
        .collect();
    let (m, se) = mean_stderr(&diffs?);
    Ok(ResidualReport {
        residual: m.abs(),
        stderr: se,
        n_samples: n_outer,
        tolerance: 1e-12,
    })
}

/// `∫_0^t p_u ∂_q f(q_u, p_u) du` along one path, by composite
/// Gauss–Legendre on each linear piece.
pub fn generator_integral(f: &TestFunction, path: &Trajectory<f64>, t: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut a = 0.0;
    while a < t {
        let x = path.evaluate(&a)?;
        let next = path.epochs()[x.n_collisions];
        let b = next.min(t);
        let (q, p) = (x.q, x.p);
        let pieces = 4;
        for k in 0..pieces {
            let l = a + (b - a) * k as f64 / pieces as f64;
            let r = a + (b - a) * (k + 1) as f64 / pieces as f64;
            total += gauss_legendre(|u| p * (f.dfdq)(q + p * (u - a), p), l, r);
        }
        a = next;
    }
    Ok(total)
}

/// Monte Carlo residual of Dynkin's formula
/// `E f(X_t) - f(x0) - E ∫_0^t Lf(X_u) du`.
pub fn generator_residual(
    f: &TestFunction,
    phi: &ProbabilityLaw,
    x0: (f64, f64),
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let (p, r) = f.boundary_residual(phi)?;
    if r > 1e-9 {
        return Err(Error::BoundaryConditionViolated { p, residual: r });
    }
    let f0 = f.eval(x0.0, x0.1);
    let vals: Result<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let path = simulate(x0.0, x0.1, t, phi, &mut rng)?;
            let x = path.evaluate(&t)?;
            Ok(f.eval(x.q, x.p) - f0 - generator_integral(f, &path, t)?)
        })
        .collect();
    let (m, se) = mean_stderr(&vals?);
    Ok(ResidualReport {
        residual: m.abs(),
        stderr: se,
        n_samples,
        tolerance: 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_dynamics_have_zero_semigroup_residual() {
        let phi = ProbabilityLaw::dirac(1.0).unwrap();
        let f = TestFunction::sin_2pi_q();
        let r = semigroup_residual(&f, &phi, (0.2, 1.3), 1.0, 1.0, 50, 3, 1).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
    }

    #[test]
    fn zero_lag_is_exact() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let f = TestFunction::new("q", Arc::new(|q, _| q), Arc::new(|_, _| 1.0));
        let r = semigroup_residual(&f, &phi, (0.0, 1.0), 1.0, 0.0, 200, 2, 2).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn two_atom_semigroup_within_noise() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let f = TestFunction::new("q", Arc::new(|q, _| q), Arc::new(|_, _| 1.0));
        let r = semigroup_residual(&f, &phi, (0.0, 1.0), 1.0, 1.0, 20_000, 1, 3).unwrap();
        assert!(r.within(5.0), "{r:?}");
    }

    #[test]
    fn constant_function_has_zero_generator_residual() {
        let phi = ProbabilityLaw::dyadic();
        let r = generator_residual(&TestFunction::constant(2.0), &phi, (0.3, 0.5), 2.0, 100, 0).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn boundary_violation_is_reported() {
        let phi = ProbabilityLaw::dirac(1.0).unwrap();
        let f = TestFunction::new("q", Arc::new(|q, _| q), Arc::new(|_, _| 1.0));
        assert!(matches!(
            generator_residual(&f, &phi, (0.0, 1.0), 1.0, 10, 0),
            Err(Error::BoundaryConditionViolated { .. })
        ));
    }

    #[test]
    fn sine_generator_residual_unit_speed() {
        let phi = ProbabilityLaw::dirac(1.0).unwrap();
        let r = generator_residual(&TestFunction::sin_2pi_q(), &phi, (0.1, 1.0), 1.7, 10, 0).unwrap();
        assert!(r.within(5.0), "{r:?}");
    }
}
