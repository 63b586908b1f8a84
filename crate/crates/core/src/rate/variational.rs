//! `π(p) H(π̃|φ) = sup { π(p g) : φ(e^g) = 1 }` over finite candidate pools.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::omega::OmegaMeasure;
use crate::error::{Error, Result};
use crate::laws::{expectation, log_expectation_exp, size_bias, ProbabilityLaw};
use crate::numerics::KahanSum;

pub type SpeedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Candidate {
    pub name: String,
    pub g: SpeedFn,
}

impl fmt::Debug for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Candidate({})", self.name)
    }
}

impl Candidate {
    pub fn new(name: impl Into<String>, g: SpeedFn) -> Self {
        Self { name: name.into(), g }
    }

    pub fn zero() -> Self {
        Self::new("0", Arc::new(|_| 0.0))
    }

    /// `g + a`.
    pub fn shifted(&self, a: f64) -> Self {
        let g = self.g.clone();
        Self::new(format!("{}{:+}", self.name, a), Arc::new(move |x| g(x) + a))
    }

    /// Piecewise linear in `log p` through `(log xᵢ, yᵢ)`, constant outside.
    pub fn piecewise_log_linear(name: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        Self::new(
            name,
            Arc::new(move |p| {
                let l = p.ln();
                if l <= lx[0] {
                    return ys[0];
                }
                for k in 1..lx.len() {
                    if l <= lx[k] {
                        let s = (l - lx[k - 1]) / (lx[k] - lx[k - 1]);
                        return ys[k - 1] + s * (ys[k] - ys[k - 1]);
                    }
                }
                ys[ys.len() - 1]
            }),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalReport {
    pub value: f64,
    pub best: String,
    pub evaluated: usize,
}

fn sum_or_expect(law: &ProbabilityLaw, h: &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64> {
    if let Some(a) = law.as_atomic() {
        let mut s = KahanSum::new();
        for (x, lw) in a.points() {
            if lw > f64::NEG_INFINITY {
                s.add(lw.exp() * h(x));
            }
        }
        return Ok(s.value());
    }
    Ok(expectation(law, &|x| h(x))?.to_f64())
}

/// `π(p g) - π(p) log φ(e^g)`: the objective at `g` after normalisation.
pub fn candidate_value(pi: &ProbabilityLaw, phi: &ProbabilityLaw, g: &SpeedFn) -> Result<f64> {
    let log_z = log_expectation_exp(phi, &|x| g(x))?;
    if log_z == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mean = sum_or_expect(pi, &|x| x)?;
    let pg = sum_or_expect(pi, &|x| {
        let v = g(x);
        if v == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            x * v
        }
    })?;
    Ok(pg - mean * log_z)
}

/// `log dπ̃/dφ`, available when both laws are atomic and `π̃ ≪ φ`.
pub fn optimizer_candidate(pi: &ProbabilityLaw, phi: &ProbabilityLaw) -> Result<Option<Candidate>> {
    if !(pi.is_atomic() && phi.is_atomic()) {
        return Ok(None);
    }
    let t = size_bias(pi)?;
    let a = t.as_atomic().expect("size bias keeps atoms");
    if a.points().any(|(x, _)| t.log_density_ratio(phi, x) == f64::INFINITY) {
        return Ok(None);
    }
    let phi = phi.clone();
    Ok(Some(Candidate::new(
        "log dπ̃/dφ",
        Arc::new(move |x| t.log_density_ratio(&phi, x)),
    )))
}

/// Random pool of piecewise log-linear functions with `knots` nodes spread
/// over `[lo, hi]` and values in `[-amplitude, amplitude]`.
pub fn random_candidates<R: Rng + ?Sized>(
    n: usize,
    lo: f64,
    hi: f64,
    knots: usize,
    amplitude: f64,
    rng: &mut R,
) -> Vec<Candidate> {
    let knots = knots.max(2);
    let xs: Vec<f64> = (0..knots)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (knots - 1) as f64).exp())
        .collect();
    (0..n)
        .map(|i| {
            let ys = (0..knots).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
            Candidate::piecewise_log_linear(format!("random#{i}"), xs.clone(), ys)
        })
        .collect()
}

/// Best normalised objective over `candidates` and `g ≡ 0`; a lower bound
/// of `π(p) H(π̃|φ)`, equal to it when the optimizer is in the pool.
pub fn variational_entropy(pi: &ProbabilityLaw, phi: &ProbabilityLaw, candidates: &[Candidate]) -> Result<VariationalReport> {
    let zero = Candidate::zero();
    let pool: Vec<&Candidate> = std::iter::once(&zero).chain(candidates.iter()).collect();
    let values: Result<Vec<f64>> = pool.par_iter().map(|c| candidate_value(pi, phi, &c.g)).collect();
    let values = values?;
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    Ok(VariationalReport {
        value,
        best: pool[best].name.clone(),
        evaluated: pool.len(),
    })
}

/// Donsker–Varadhan functional on measures `π(dp) dq`, by the same
/// maximisation.
pub fn dv_rate(mu: &OmegaMeasure, phi: &ProbabilityLaw, candidates: &[Candidate]) -> Result<VariationalReport> {
    let (a1, a2, a3) = mu.alphas();
    if a2 > 0.0 || a3 > 0.0 || a1 != 1.0 {
        return Err(Error::NotInOmega0);
    }
    variational_entropy(mu.pi(phi), phi, candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::relative_entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn closed_form(pi: &ProbabilityLaw, phi: &ProbabilityLaw) -> f64 {
        let m = pi.mean().unwrap().to_f64();
        m * relative_entropy(&size_bias(pi).unwrap(), phi).unwrap().to_f64()
    }

    #[test]
    fn optimizer_attains_closed_form() {
        let pi = ProbabilityLaw::atomic(&[(1.0, 0.3), (2.0, 0.7)]).unwrap();
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.25), (5.0, 0.25)]).unwrap();
        let g = optimizer_candidate(&pi, &phi).unwrap().unwrap();
        let r = variational_entropy(&pi, &phi, &[g]).unwrap();
        assert!((r.value - closed_form(&pi, &phi)).abs() < 1e-12);
        assert_eq!(r.best, "log dπ̃/dφ");
    }

    #[test]
    fn invariant_pair_gives_zero() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let pi = crate::laws::size_bias_inverse(&phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pool = random_candidates(50, 0.5, 4.0, 4, 2.0, &mut rng);
        let r = variational_entropy(&pi, &phi, &pool).unwrap();
        assert!(r.value.abs() < 1e-12 && r.best == "0");
    }

    #[test]
    fn shift_invariance() {
        let pi = ProbabilityLaw::atomic(&[(1.0, 0.3), (2.0, 0.7)]).unwrap();
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in random_candidates(20, 0.5, 4.0, 3, 1.0, &mut rng) {
            let a = candidate_value(&pi, &phi, &c.g).unwrap();
            let b = candidate_value(&pi, &phi, &c.shifted(3.7).g).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dv_refuses_frozen_mass() {
        let phi = ProbabilityLaw::dyadic();
        let mu = OmegaMeasure::new(0.0, 1.0, 0.0, None, 0.5).unwrap();
        assert!(matches!(dv_rate(&mu, &phi, &[]), Err(Error::NotInOmega0)));
    }
}
