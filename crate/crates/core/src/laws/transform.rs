use std::sync::Arc;

use super::tail::log_expectation_exp;
use super::{LawRole, ProbabilityLaw, Repr};
use crate::error::{Error, Result};

fn reciprocal(law: &ProbabilityLaw) -> ProbabilityLaw {
    let repr = match law.repr() {
        Repr::Atomic(a) => Repr::Atomic(a.reciprocal()),
        Repr::Density(d) => Repr::Density(d.reciprocal()),
        Repr::Mixture(c) => Repr::Mixture(c.iter().map(|(w, l)| (*w, reciprocal(l))).collect()),
    };
    ProbabilityLaw::from_parts(repr, law.role().flipped(), law.name().to_string())
}

/// Pushforward of a speed law `φ` by `v ↦ 1/v`: the cycle-duration law `ψ`.
pub fn speed_to_interarrival(phi: &ProbabilityLaw) -> ProbabilityLaw {
    reciprocal(phi).with_role(LawRole::Interarrival)
}

/// Pushforward of `ψ` by `τ ↦ 1/τ`.
pub fn interarrival_to_speed(psi: &ProbabilityLaw) -> ProbabilityLaw {
    reciprocal(psi).with_role(LawRole::Speed)
}

/// `Z⁻¹ e^{log_factor(x)} law(dx)` with `log Z = log law(e^{log_factor})`.
/// Returns the law and `log Z`.
pub fn reweight(law: &ProbabilityLaw, log_factor: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<(ProbabilityLaw, f64)> {
    let log_z = log_expectation_exp(law, &*log_factor)?;
    if log_z == f64::INFINITY {
        return Err(Error::DivergentNormalizer);
    }
    if log_z == f64::NEG_INFINITY {
        return Err(Error::InvalidLaw("reweighting kills all mass".into()));
    }
    let repr = match law.repr() {
        Repr::Atomic(a) => Repr::Atomic(a.reweighted(|x| log_factor(x))?),
        Repr::Density(d) => {
            let (lo, hi) = d.support();
            Repr::Density(d.reweighted(log_factor.clone(), log_z, lo, hi))
        }
        Repr::Mixture(c) => {
            let mut parts = Vec::with_capacity(c.len());
            for (w, l) in c {
                let (rl, lz) = reweight(l, log_factor.clone())?;
                parts.push(((w.ln() + lz - log_z).exp(), rl));
            }
            let total: f64 = parts.iter().map(|p| p.0).sum();
            for p in &mut parts {
                p.0 /= total;
            }
            return Ok((
                ProbabilityLaw::mixture(parts)?.with_role(law.role()),
                log_z,
            ));
        }
    };
    Ok((ProbabilityLaw::from_parts(repr, law.role(), law.name().to_string()), log_z))
}

/// Size-biased law `π̃(dp) = p π(dp) / π(p)`.
pub fn size_bias(pi: &ProbabilityLaw) -> Result<ProbabilityLaw> {
    match reweight(pi, Arc::new(|p: f64| p.ln())) {
        Ok((law, _)) => Ok(law.with_name(format!("size_bias({})", pi.name()))),
        Err(Error::DivergentNormalizer) => Err(Error::InfiniteMean),
        Err(Error::InvalidLaw(_)) => Err(Error::ZeroMean),
        Err(e) => Err(e),
    }
}

/// Inverse of [`size_bias`]: `π(dp) = p⁻¹ π̃(dp) / π̃(p⁻¹)`.
pub fn size_bias_inverse(pi_tilde: &ProbabilityLaw) -> Result<ProbabilityLaw> {
    match reweight(pi_tilde, Arc::new(|p: f64| -p.ln())) {
        Ok((law, _)) => Ok(law.with_name(format!("size_bias_inverse({})", pi_tilde.name()))),
        Err(Error::DivergentNormalizer) => Err(Error::InfiniteMean),
        Err(e) => Err(e),
    }
}

/// `C_f⁻¹ e^{f̄(1,v)/v} φ(dv)` together with `C_f = φ(e^{f̄(1,·)/·})`.
pub fn tilt_by_boundary_function(
    phi: &ProbabilityLaw,
    fbar_at_one: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
) -> Result<(ProbabilityLaw, f64)> {
    let (law, log_c) = reweight(phi, Arc::new(move |v: f64| fbar_at_one(v) / v))?;
    Ok((law.with_name(format!("tilt({})", phi.name())), log_c.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_round_trip_is_exact_on_atoms() {
        let phi = ProbabilityLaw::atomic(&[(0.3, 0.2), (1.7, 0.8)]).unwrap();
        let back = interarrival_to_speed(&speed_to_interarrival(&phi));
        let a = phi.as_atomic().unwrap();
        let b = back.as_atomic().unwrap();
        assert_eq!(a.atoms(), b.atoms());
        assert_eq!(a.weights(), b.weights());
        assert_eq!(back.role(), LawRole::Speed);
    }

    #[test]
    fn size_bias_round_trip() {
        let pi = ProbabilityLaw::atomic(&[(0.5, 0.5), (2.0, 0.5)]).unwrap();
        let t = size_bias(&pi).unwrap();
        let w = t.as_atomic().unwrap().weights();
        assert!((w[0] - 0.2).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
        let back = size_bias_inverse(&t).unwrap();
        let w = back.as_atomic().unwrap().weights();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn size_bias_of_heavy_law_fails() {
        let phi = ProbabilityLaw::exp_interarrival(1.0).unwrap();
        assert!(matches!(size_bias(&phi), Err(Error::InfiniteMean)));
        // The inverse exists: p⁻¹ φ(dp) / E[τ].
        let pi = size_bias_inverse(&phi).unwrap();
        assert!((pi.mean().unwrap().to_f64() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tilt_normaliser() {
        let phi = ProbabilityLaw::dyadic();
        // f̄(1, v) = -v log 2 gives C_f = 1/2.
        let (t, c) = tilt_by_boundary_function(&phi, Arc::new(|v: f64| -v * 2f64.ln())).unwrap();
        assert!((c - 0.5).abs() < 1e-14);
        let w: f64 = t.as_atomic().unwrap().weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-14);
        assert!(matches!(
            tilt_by_boundary_function(&phi, Arc::new(|_| 2.0)),
            Err(Error::DivergentNormalizer)
        ));
    }
}
