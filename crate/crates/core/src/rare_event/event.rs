//! Events as predicates on empirical measures.

use serde::{Deserialize, Serialize};

use crate::empirical::{BlSignature, EmpiricalMeasure, BL_NODES};
use crate::error::Result;
use crate::laws::{speed_to_interarrival, ProbabilityLaw};
use crate::rate::{OmegaMeasure, OmegaSpec};

#[derive(Clone, Debug)]
pub enum Event {
    Always,
    /// `μ(p) > M`.
    MeanMomentumExceeds(f64),
    /// Bounded-Lipschitz ball around a fixed measure.
    BlBall { center: Box<BlSignature>, radius: f64 },
    /// Same, looking only at the momentum marginal.
    MarginalBall { center: Box<BlSignature>, radius: f64 },
}

impl Event {
    pub fn bl_ball(center: &OmegaMeasure, radius: f64) -> Result<Self> {
        Ok(Self::BlBall {
            center: Box::new(center.bl_signature()?),
            radius,
        })
    }

    pub fn marginal_ball(center: &OmegaMeasure, radius: f64) -> Result<Self> {
        Ok(Self::MarginalBall {
            center: Box::new(center.bl_signature()?),
            radius,
        })
    }

    /// Ball around `α γ + (1-α) δ₀ ⊗ λ_ℓ`.
    pub fn a_ball(phi: &ProbabilityLaw, alpha: f64, ell: f64, radius: f64) -> Result<Self> {
        Self::bl_ball(&a_ball_center(phi, alpha, ell)?, radius)
    }

    pub fn contains(&self, m: &EmpiricalMeasure<f64>) -> bool {
        match self {
            Self::Always => true,
            Self::MeanMomentumExceeds(level) => m.mean_momentum() > *level,
            Self::BlBall { center, radius } => BlSignature::of_measure(m).distance(center) <= *radius,
            Self::MarginalBall { center, radius } => {
                let s = BlSignature::of_measure(m);
                let d = (0..BL_NODES)
                    .map(|j| (s.p_marginal[j] - center.p_marginal[j]).abs())
                    .fold(0.0, f64::max);
                d / BL_NODES as f64 <= *radius
            }
        }
    }
}

/// `γ`: `dq ⊗ π` with `π̃ = φ` when `ψ` has finite mean, else `δ₀ ⊗ dq`.
pub fn gamma(phi: &ProbabilityLaw) -> Result<OmegaMeasure> {
    let finite_mean = speed_to_interarrival(phi).mean()?.is_finite();
    if finite_mean {
        OmegaMeasure::invariant(phi)
    } else {
        OmegaMeasure::new(0.0, 1.0, 0.0, None, 0.5)
    }
}

/// `α γ + (1-α) δ₀(dp) λ_ℓ(dq)`.
pub fn a_ball_center(phi: &ProbabilityLaw, alpha: f64, ell: f64) -> Result<OmegaMeasure> {
    if alpha == 0.0 {
        return OmegaMeasure::new(0.0, 0.0, 1.0, None, ell);
    }
    let g = gamma(phi)?;
    if g.alphas().0 > 0.0 {
        OmegaMeasure::from_size_biased(alpha, 0.0, 1.0 - alpha, phi.clone(), ell)
    } else {
        OmegaMeasure::new(0.0, alpha, 1.0 - alpha, None, ell)
    }
}

/// Configuration form of an [`Event`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    Always,
    MeanMomentumExceeds { level: f64 },
    BlBall { center: OmegaSpec, radius: f64 },
    MarginalBall { center: OmegaSpec, radius: f64 },
    /// Ball around `α γ + (1-α) δ₀ ⊗ λ_ℓ`.
    ABall { alpha: f64, ell: f64, radius: f64 },
}

impl EventSpec {
    pub fn build(&self, phi: &ProbabilityLaw) -> Result<Event> {
        match self {
            Self::Always => Ok(Event::Always),
            Self::MeanMomentumExceeds { level } => Ok(Event::MeanMomentumExceeds(*level)),
            Self::BlBall { center, radius } => Event::bl_ball(&center.build(phi)?, *radius),
            Self::MarginalBall { center, radius } => Event::marginal_ball(&center.build(phi)?, *radius),
            Self::ABall { alpha, ell, radius } => Event::a_ball(phi, *alpha, *ell, *radius),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Component;

    #[test]
    fn wall_measure_is_near_its_center() {
        let phi = ProbabilityLaw::dyadic();
        let ev = Event::a_ball(&phi, 0.0, 0.5, 0.01).unwrap();
        let near = EmpiricalMeasure::from_components(
            vec![Component { momentum: 2f64.powi(-10), q_lo: 0.0, q_hi: 0.51, weight: 1.0 }],
            None,
        )
        .unwrap();
        assert!(ev.contains(&near));
        let far = EmpiricalMeasure::from_components(
            vec![Component { momentum: 0.5, q_lo: 0.0, q_hi: 1.0, weight: 1.0 }],
            None,
        )
        .unwrap();
        assert!(!ev.contains(&far));
        assert!(Event::MeanMomentumExceeds(0.0).contains(&far));
    }

    #[test]
    fn gamma_for_heavy_cycles_is_frozen() {
        // ψ = law of 1/v for polynomial(1/2) has infinite mean.
        let phi = ProbabilityLaw::polynomial(0.5).unwrap();
        assert_eq!(gamma(&phi).unwrap().alphas(), (0.0, 1.0, 0.0));
        let phi = ProbabilityLaw::dyadic();
        assert_eq!(gamma(&phi).unwrap().alphas(), (1.0, 0.0, 0.0));
    }
}
