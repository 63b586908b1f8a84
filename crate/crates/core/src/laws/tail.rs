//! Moments, exponential moments and the two tail exponents of a speed law.
//!
//! Truncated atomic laws and densities with an unbounded end are checked for
//! tail behaviour before any sum or integral is trusted: the log of the
//! contribution near the end must either visibly decay to a negligible level
//! (finite) or visibly fail to decay (divergent). Anything else is reported
//! as [`Error::InconclusiveConvergence`].

use serde::Serialize;

use super::atomic::{Accumulation, AtomicLaw};
use super::density::{log_integral_exp, DensityLaw};
use super::{ProbabilityLaw, Repr};
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;
use crate::scalar::ExtendedReal;

/// Upper end of the bisection bracket for `ξ`; finiteness there means `ξ = ∞`.
pub const C_MAX: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Negligible,
    Divergent,
    Unknown,
}

/// `hs` are log-contributions ordered towards the end of the support.
fn tail_verdict(hs: &[f64], negligible_below: f64) -> Verdict {
    let n = hs.len();
    let (a, b, c) = (hs[n - 3], hs[n - 2], hs[n - 1]);
    if c == f64::INFINITY || (c >= b - 1e-9 * b.abs().max(1.0) && b >= a - 1e-9 * a.abs().max(1.0) && c > -30.0) {
        Verdict::Divergent
    } else if (c < b && b < a && c < negligible_below) || c == f64::NEG_INFINITY {
        Verdict::Negligible
    } else if a.max(b).max(c) < negligible_below - 10.0 && (a == f64::NEG_INFINITY || b == f64::NEG_INFINITY) {
        // rounding noise of an integrand that is zero up to cancellation
        Verdict::Negligible
    } else {
        Verdict::Unknown
    }
}

fn atomic_tail(law: &AtomicLaw, log_term: &dyn Fn(f64, f64) -> f64, negligible_below: f64) -> Verdict {
    let pts: Vec<(f64, f64)> = law.points().collect();
    if pts.len() < 3 {
        return Verdict::Negligible;
    }
    let ends: Vec<f64> = match law.accumulation() {
        Accumulation::None => return Verdict::Negligible,
        Accumulation::AtZero => pts[..3].iter().rev().map(|(a, lw)| log_term(*a, *lw)).collect(),
        Accumulation::AtInfinity => pts[pts.len() - 3..]
            .iter()
            .map(|(a, lw)| log_term(*a, *lw))
            .collect(),
    };
    tail_verdict(&ends, negligible_below)
}

/// Verdicts at the lower end (if it is `0`) and the upper end (if `∞`) of a
/// density's support for the integrand `e^{h(x)}` against `dx`.
fn density_tails(d: &DensityLaw, log_integrand: &dyn Fn(f64) -> f64, negligible_below: f64) -> Verdict {
    let (lo, hi) = d.support();
    let mut verdicts = Vec::new();
    if lo == 0.0 {
        let s = hi.min(1.0);
        let hs: Vec<f64> = (6..=16)
            .map(|k| {
                let x = s * 10f64.powi(-k);
                log_integrand(x) + x.ln()
            })
            .collect();
        verdicts.push(tail_verdict(&hs, negligible_below));
    }
    if hi.is_infinite() {
        let s = lo.max(1.0);
        let hs: Vec<f64> = (6..=16)
            .map(|k| {
                let x = s * 10f64.powi(k);
                log_integrand(x) + x.ln()
            })
            .collect();
        verdicts.push(tail_verdict(&hs, negligible_below));
    }
    if verdicts.contains(&Verdict::Divergent) {
        Verdict::Divergent
    } else if verdicts.contains(&Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Negligible
    }
}

/// `log ∫ e^{log_g(x)} law(dx)`; `+∞` when the integral diverges.
pub fn log_expectation_exp(law: &ProbabilityLaw, log_g: &dyn Fn(f64) -> f64) -> Result<f64> {
    match law.repr() {
        Repr::Atomic(a) => {
            let terms: Vec<f64> = a.points().map(|(x, lw)| lw + log_g(x)).collect();
            let total = log_sum_exp(terms.iter().copied());
            match atomic_tail(a, &|x, lw| lw + log_g(x), total.min(0.0) - 40.0) {
                Verdict::Divergent => Ok(f64::INFINITY),
                Verdict::Negligible => Ok(total),
                Verdict::Unknown => Err(Error::InconclusiveConvergence(format!(
                    "atomic tail of {} neither decays nor grows",
                    law.name()
                ))),
            }
        }
        Repr::Density(d) => {
            let integrand = |x: f64| log_g(x) + d.log_pdf(x);
            match density_tails(d, &integrand, -30.0) {
                Verdict::Divergent => Ok(f64::INFINITY),
                Verdict::Unknown => Err(Error::InconclusiveConvergence(format!(
                    "density tail of {} neither decays nor grows",
                    law.name()
                ))),
                Verdict::Negligible => {
                    let (lo, hi) = d.support();
                    Ok(log_integral_exp(&integrand, lo, hi))
                }
            }
        }
        Repr::Mixture(c) => {
            let mut parts = Vec::with_capacity(c.len());
            for (w, l) in c {
                parts.push(w.ln() + log_expectation_exp(l, log_g)?);
            }
            Ok(log_sum_exp(parts))
        }
    }
}

/// `∫ g d(law)`, `+∞` when the positive part diverges.
pub fn expectation(law: &ProbabilityLaw, g: &dyn Fn(f64) -> f64) -> Result<ExtendedReal> {
    let pos = |x: f64| {
        let y = g(x);
        if y > 0.0 {
            y.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let neg = |x: f64| {
        let y = g(x);
        if y < 0.0 {
            (-y).ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let lp = log_expectation_exp(law, &pos)?;
    let ln = log_expectation_exp(law, &neg)?;
    if lp == f64::INFINITY && ln == f64::INFINITY {
        return Err(Error::InconclusiveConvergence(
            "positive and negative parts both diverge".into(),
        ));
    }
    if lp == f64::INFINITY {
        return Ok(ExtendedReal::Infinite);
    }
    if ln == f64::INFINITY {
        return Err(Error::InconclusiveConvergence(
            "negative part diverges".into(),
        ));
    }
    let v = lp.exp() - ln.exp();
    if !v.is_finite() {
        return Ok(ExtendedReal::Infinite);
    }
    Ok(ExtendedReal::Finite(v))
}

/// Whether `φ(e^{c/p}) < ∞`.
pub fn exp_moment_is_finite(law: &ProbabilityLaw, c: f64) -> Result<bool> {
    let log_g = |p: f64| c / p;
    match law.repr() {
        Repr::Atomic(a) => match atomic_tail(a, &|x, lw| lw + log_g(x), -40.0) {
            Verdict::Divergent => Ok(false),
            Verdict::Negligible => Ok(true),
            Verdict::Unknown => Err(Error::InconclusiveConvergence(format!(
                "exponential moment of order {c} of {}",
                law.name()
            ))),
        },
        Repr::Density(d) => match density_tails(d, &|x| log_g(x) + d.log_pdf(x), -30.0) {
            Verdict::Divergent => Ok(false),
            Verdict::Negligible => Ok(true),
            Verdict::Unknown => Err(Error::InconclusiveConvergence(format!(
                "exponential moment of order {c} of {}",
                law.name()
            ))),
        },
        Repr::Mixture(cs) => {
            for (_, l) in cs {
                if !exp_moment_is_finite(l, c)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// `ξ = sup{c ≥ 0 : φ(e^{c/p}) < ∞}` by bisection on `[tol, C_MAX]`.
///
/// An inconclusive tail check at a trial `c` counts as divergence, so the
/// result errs on the low side.
pub fn compute_xi(law: &ProbabilityLaw, tol: f64) -> Result<ExtendedReal> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let finite = |c: f64| exp_moment_is_finite(law, c).unwrap_or(false);
    if finite(C_MAX) {
        return Ok(ExtendedReal::Infinite);
    }
    if !finite(tol) {
        return Ok(ExtendedReal::Finite(0.0));
    }
    let (mut lo, mut hi) = (tol, C_MAX);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExtendedReal::Finite(lo))
}

/// `φ([ε(1-δ), ε(1+δ)))`.
pub fn window_probability(law: &ProbabilityLaw, eps: f64, delta: f64) -> f64 {
    law.mass_in(eps * (1.0 - delta), eps * (1.0 + delta))
}

#[derive(Clone, Debug, Serialize)]
pub struct XiBarRow {
    pub delta: f64,
    pub epsilon: f64,
    pub log_mass: f64,
    /// `-ε log φ(window)`, `+∞` for an empty window.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailExponentReport {
    pub xi_bar_lower: ExtendedReal,
    pub xi_bar_upper: ExtendedReal,
    /// Empty windows keep occurring at every small `δ` and small `ε`.
    pub infinite: bool,
    pub rows: Vec<XiBarRow>,
}

impl TailExponentReport {
    /// Bracket midpoint, `+∞` when flagged infinite.
    pub fn point(&self) -> ExtendedReal {
        match (&self.xi_bar_lower, &self.xi_bar_upper) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(0.5 * (a + b)),
            _ => ExtendedReal::Infinite,
        }
    }
}

pub const DEFAULT_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

pub fn default_epsilons() -> Vec<f64> {
    (0..=40).map(|k| 0.1 * 0.7f64.powi(k)).collect()
}

/// Bracket for `ξ̄ = -lim_δ liminf_ε ε log φ([ε(1-δ), ε(1+δ)))`.
///
/// The two smallest `δ` and the smallest third of the `ε` grid enter the
/// bracket `[min v, max (1+δ) v]` where `v = -ε log φ(window)`; the factor
/// `1+δ` absorbs the window's width when the law has a smooth tail.
pub fn estimate_xi_bar(law: &ProbabilityLaw, deltas: &[f64], epsilons: &[f64]) -> Result<TailExponentReport> {
    if deltas.len() < 2 || epsilons.len() < 6 {
        return Err(Error::InvalidParameter(
            "need at least two δ values and six ε values".into(),
        ));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("δ ∈ (0,1) and ε > 0 required".into()));
    }
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    let mut es = epsilons.to_vec();
    es.sort_by(|a, b| b.total_cmp(a));
    let tail_len = (es.len() / 3).max(2);
    let tail = &es[es.len() - tail_len..];

    let mut rows = Vec::new();
    for &d in &ds {
        for &e in &es {
            let lm = law.log_mass_in(e * (1.0 - d), e * (1.0 + d));
            rows.push(XiBarRow {
                delta: d,
                epsilon: e,
                log_mass: lm,
                value: -e * lm,
            });
        }
    }
    let small = &ds[ds.len() - 2..];
    let in_tail = |r: &XiBarRow| small.contains(&r.delta) && tail.contains(&r.epsilon);
    let infinite = small.iter().all(|d| {
        rows.iter()
            .filter(|r| r.delta == *d && in_tail(r) && r.log_mass == f64::NEG_INFINITY)
            .count()
            >= 2
    });
    if infinite {
        return Ok(TailExponentReport {
            xi_bar_lower: ExtendedReal::Infinite,
            xi_bar_upper: ExtendedReal::Infinite,
            infinite,
            rows,
        });
    }
    let vals: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| in_tail(r))
        .map(|r| (r.delta, r.value))
        .collect();
    let lower = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let upper = vals
        .iter()
        .map(|(d, v)| (1.0 + d) * v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TailExponentReport {
        xi_bar_lower: ExtendedReal::from_f64(lower),
        xi_bar_upper: ExtendedReal::from_f64(upper),
        infinite,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(law: &ProbabilityLaw) -> f64 {
        compute_xi(law, 1e-7).unwrap().to_f64()
    }

    #[test]
    fn xi_of_exponential_interarrivals() {
        for xi0 in [0.5, 1.0, 2.0] {
            let law = ProbabilityLaw::exp_interarrival(xi0).unwrap();
            assert!((xi(&law) - xi0).abs() < 1e-6, "ξ0={xi0}: {}", xi(&law));
        }
    }

    #[test]
    fn xi_of_dyadic_is_one() {
        assert!((xi(&ProbabilityLaw::dyadic()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn xi_of_polynomial_is_zero() {
        assert_eq!(xi(&ProbabilityLaw::polynomial(3.0).unwrap()), 0.0);
    }

    #[test]
    fn xi_of_finite_atomic_is_infinite() {
        let law = ProbabilityLaw::atomic(&[(0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert!(compute_xi(&law, 1e-7).unwrap().is_infinite());
    }

    #[test]
    fn dyadic_window_mass_is_exact() {
        let law = ProbabilityLaw::dyadic();
        let z: f64 = (0..=60).map(|j| (-(2f64.powi(j))).exp()).sum();
        for j in [2, 5, 8] {
            let eps = 0.5f64.powi(j);
            let got = window_probability(&law, eps, 0.25);
            let want = (-(2f64.powi(j))).exp() / z;
            assert!((got - want).abs() <= 1e-12 * want);
            assert_eq!(window_probability(&law, 3.0 * eps, 0.25), 0.0);
        }
    }

    #[test]
    fn xi_bar_brackets() {
        let eps = default_epsilons();
        let r = estimate_xi_bar(&ProbabilityLaw::dyadic(), &DEFAULT_DELTAS, &eps).unwrap();
        assert!(r.infinite);
        let r = estimate_xi_bar(&ProbabilityLaw::exp_interarrival(2.0).unwrap(), &DEFAULT_DELTAS, &eps).unwrap();
        assert!(!r.infinite);
        let (lo, hi) = (r.xi_bar_lower.to_f64(), r.xi_bar_upper.to_f64());
        assert!(lo <= 2.0 + 1e-9 && 2.0 <= hi + 1e-9, "[{lo}, {hi}]");
        assert!(hi - lo < 0.1);
        let r = estimate_xi_bar(&ProbabilityLaw::polynomial(3.0).unwrap(), &DEFAULT_DELTAS, &eps).unwrap();
        assert!(r.xi_bar_upper.to_f64() < 0.05);
    }

    #[test]
    fn means() {
        let law = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!((law.mean().unwrap().to_f64() - 2.0).abs() < 1e-14);
        let law = ProbabilityLaw::polynomial(3.0).unwrap();
        assert!((law.mean().unwrap().to_f64() - 0.75).abs() < 1e-9);
        // E[v] = E[1/τ] = ∞ for exponential τ.
        assert!(ProbabilityLaw::exp_interarrival(1.0).unwrap().mean().unwrap().is_infinite());
        let tau = super::super::speed_to_interarrival(&ProbabilityLaw::exp_interarrival(2.0).unwrap());
        assert!((tau.mean().unwrap().to_f64() - 0.5).abs() < 1e-9);
    }
}
