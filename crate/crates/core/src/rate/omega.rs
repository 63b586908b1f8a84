//! Measures of the form `α₁ π(dp) dq + α₂ δ₀(dp) dq + α₃ δ₀(dp) λ_ℓ(dq)`.

use serde::{Deserialize, Serialize};

use super::combine::{combine_i, combine_i_bar, gap, RateInputs, RateValue};
use super::entropy::relative_entropy;
use crate::empirical::{BlSignature, Component, EmpiricalMeasure};
use crate::error::{Error, Result};
use crate::laws::{size_bias, size_bias_inverse, LawSpec, ProbabilityLaw};
use crate::scalar::ExtendedReal;

#[derive(Clone, Debug)]
pub struct OmegaMeasure {
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
    /// `None` when `α₁ = 0` (then `π = φ` by convention).
    pi: Option<ProbabilityLaw>,
    pi_tilde: Option<ProbabilityLaw>,
    pi_mean: f64,
    ell: f64,
    outside: bool,
}

impl OmegaMeasure {
    /// `pi` may be omitted when `alpha1 = 0`; `ell` is ignored when `alpha3 = 0`.
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64, pi: Option<ProbabilityLaw>, ell: f64) -> Result<Self> {
        let (pi, pi_tilde) = match (alpha1 > 0.0, pi) {
            (true, Some(pi)) => {
                let t = size_bias(&pi)?;
                (Some(pi), Some(t))
            }
            (true, None) => return Err(Error::InvalidParameter("α₁ > 0 needs a law π".into())),
            (false, _) => (None, None),
        };
        Self::assemble(alpha1, alpha2, alpha3, pi, pi_tilde, ell)
    }

    /// Same, with the size-biased law `π̃` given instead of `π`.
    pub fn from_size_biased(alpha1: f64, alpha2: f64, alpha3: f64, pi_tilde: ProbabilityLaw, ell: f64) -> Result<Self> {
        if alpha1 > 0.0 {
            let pi = size_bias_inverse(&pi_tilde)?;
            Self::assemble(alpha1, alpha2, alpha3, Some(pi), Some(pi_tilde), ell)
        } else {
            Self::assemble(alpha1, alpha2, alpha3, None, None, ell)
        }
    }

    /// The invariant measure `dq ⊗ π` with `π̃ = φ`.
    pub fn invariant(phi: &ProbabilityLaw) -> Result<Self> {
        Self::from_size_biased(1.0, 0.0, 0.0, phi.clone(), 0.5)
    }

    fn assemble(
        alpha1: f64,
        alpha2: f64,
        alpha3: f64,
        pi: Option<ProbabilityLaw>,
        pi_tilde: Option<ProbabilityLaw>,
        ell: f64,
    ) -> Result<Self> {
        for a in [alpha1, alpha2, alpha3] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter(format!("weight {a} outside [0, 1]")));
            }
        }
        if (alpha1 + alpha2 + alpha3 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("α₁ + α₂ + α₃ must equal 1".into()));
        }
        let ell = if alpha3 == 0.0 { 0.5 } else { ell };
        if !(0.0..1.0).contains(&ell) {
            return Err(Error::InvalidParameter(format!("ℓ = {ell} outside [0, 1)")));
        }
        let pi_mean = match &pi {
            Some(p) => match p.mean()? {
                ExtendedReal::Finite(m) => m,
                ExtendedReal::Infinite => return Err(Error::InfiniteMean),
            },
            None => 0.0,
        };
        Ok(Self {
            alpha1,
            alpha2,
            alpha3,
            pi,
            pi_tilde,
            pi_mean,
            ell,
            outside: false,
        })
    }

    /// Flags a measure that is not in `Ω`; its rates are `+∞`.
    pub fn declared_outside(mut self) -> Self {
        self.outside = true;
        self
    }

    pub fn alphas(&self) -> (f64, f64, f64) {
        (self.alpha1, self.alpha2, self.alpha3)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// `π`, or `φ` when `α₁ = 0`.
    pub fn pi<'a>(&'a self, phi: &'a ProbabilityLaw) -> &'a ProbabilityLaw {
        self.pi.as_ref().unwrap_or(phi)
    }

    pub fn pi_tilde(&self) -> Option<&ProbabilityLaw> {
        self.pi_tilde.as_ref()
    }

    /// `μ(p) = α₁ π(p)`.
    pub fn mean_momentum(&self) -> f64 {
        self.alpha1 * self.pi_mean
    }

    pub fn is_outside(&self) -> bool {
        self.outside
    }

    /// `H(π̃|φ)`, zero when `α₁ = 0`.
    pub fn entropy(&self, phi: &ProbabilityLaw) -> Result<ExtendedReal> {
        match &self.pi_tilde {
            Some(t) => relative_entropy(t, phi),
            None => Ok(ExtendedReal::zero()),
        }
    }

    pub fn rate_inputs(&self, phi: &ProbabilityLaw) -> Result<RateInputs> {
        Ok(RateInputs {
            mean_momentum: self.mean_momentum(),
            entropy: self.entropy(phi)?,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            ell: self.ell,
        })
    }

    /// `dq ⊗ π` part, frozen part and wall part as exact mixture components,
    /// for atomic `π`.
    pub fn to_empirical(&self) -> Result<EmpiricalMeasure<f64>> {
        let mut comps = Vec::new();
        if let Some(pi) = &self.pi {
            let a = pi.as_atomic().ok_or(Error::NonAtomicTarget)?;
            for (p, lw) in a.points() {
                comps.push(Component {
                    momentum: p,
                    q_lo: 0.0,
                    q_hi: 1.0,
                    weight: self.alpha1 * lw.exp(),
                });
            }
        }
        comps.extend(self.frozen_components());
        EmpiricalMeasure::from_components(comps, None)
    }

    fn frozen_components(&self) -> Vec<Component<f64>> {
        let mut comps = Vec::new();
        if self.alpha2 > 0.0 {
            comps.push(Component {
                momentum: 0.0,
                q_lo: 0.0,
                q_hi: 1.0,
                weight: self.alpha2,
            });
        }
        if self.alpha3 > 0.0 {
            comps.push(Component {
                momentum: 0.0,
                q_lo: 0.0,
                q_hi: self.ell,
                weight: self.alpha3,
            });
        }
        comps
    }

    /// Integrals of the bounded-Lipschitz test family.
    pub fn bl_signature(&self) -> Result<BlSignature> {
        let mut parts = Vec::new();
        if let Some(pi) = &self.pi {
            parts.push((self.alpha1, BlSignature::of_product(pi)?));
        }
        let frozen = self.frozen_components();
        if !frozen.is_empty() {
            let w: f64 = frozen.iter().map(|c| c.weight).sum();
            let comps = frozen
                .into_iter()
                .map(|c| Component { weight: c.weight / w, ..c })
                .collect();
            let m = EmpiricalMeasure::from_components(comps, None)?;
            parts.push((w, BlSignature::of_measure(&m)));
        }
        Ok(BlSignature::combine(&parts))
    }

    pub fn bl_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.bl_signature()?.distance(&other.bl_signature()?))
    }
}

/// `I(μ)`.
pub fn rate_i(mu: &OmegaMeasure, phi: &ProbabilityLaw, xi: &ExtendedReal) -> Result<RateValue> {
    if mu.outside {
        return Ok(RateValue::infinite());
    }
    Ok(combine_i(&mu.rate_inputs(phi)?, xi))
}

/// `Ī(μ)`.
pub fn rate_i_bar(mu: &OmegaMeasure, phi: &ProbabilityLaw, xi: &ExtendedReal, xi_bar: &ExtendedReal) -> Result<RateValue> {
    if mu.outside {
        return Ok(RateValue::infinite());
    }
    Ok(combine_i_bar(&mu.rate_inputs(phi)?, xi, xi_bar))
}

/// `J(μ) = Ī(μ) - I(μ) = α₃ ℓ⁻¹ (ξ̄ - ξ)`.
pub fn rate_gap(mu: &OmegaMeasure, xi: &ExtendedReal, xi_bar: &ExtendedReal) -> Result<ExtendedReal> {
    let r = RateInputs {
        mean_momentum: 0.0,
        entropy: ExtendedReal::zero(),
        alpha2: mu.alpha2,
        alpha3: mu.alpha3,
        ell: mu.ell,
    };
    gap(&r, xi, xi_bar).ok_or_else(|| Error::InvalidParameter("ξ̄ < ξ".into()))
}

/// Configuration form of an [`OmegaMeasure`]; at most one of `pi`,
/// `pi_tilde` may be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<LawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_tilde: Option<LawSpec>,
    #[serde(default = "half")]
    pub ell: f64,
}

fn half() -> f64 {
    0.5
}

impl OmegaSpec {
    /// Builds the measure; with neither law given, `π̃ = φ`.
    pub fn build(&self, phi: &ProbabilityLaw) -> Result<OmegaMeasure> {
        match (&self.pi, &self.pi_tilde) {
            (Some(_), Some(_)) => Err(Error::InvalidParameter("give either pi or pi_tilde".into())),
            (Some(p), None) => OmegaMeasure::new(self.alpha1, self.alpha2, self.alpha3, Some(p.build()?), self.ell),
            (None, Some(t)) => OmegaMeasure::from_size_biased(self.alpha1, self.alpha2, self.alpha3, t.build()?, self.ell),
            (None, None) => OmegaMeasure::from_size_biased(self.alpha1, self.alpha2, self.alpha3, phi.clone(), self.ell),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::compute_xi;

    #[test]
    fn invariant_measure_costs_nothing() {
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.4), (3.0, 0.6)]).unwrap();
        let mu = OmegaMeasure::invariant(&phi).unwrap();
        let r = rate_i(&mu, &phi, &ExtendedReal::Finite(0.0)).unwrap();
        assert_eq!(r.total, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn frozen_and_wall_costs() {
        let phi = ProbabilityLaw::dyadic();
        let xi = compute_xi(&phi, 1e-8).unwrap();
        let frozen = OmegaMeasure::new(0.0, 1.0, 0.0, None, 0.5).unwrap();
        let r = rate_i(&frozen, &phi, &xi).unwrap().total.to_f64();
        assert!((r - 1.0).abs() < 1e-6);
        let wall = OmegaMeasure::new(0.0, 0.0, 1.0, None, 0.5).unwrap();
        let r = rate_i(&wall, &phi, &xi).unwrap().total.to_f64();
        assert!((r - 2.0).abs() < 2e-6);
        let rb = rate_i_bar(&wall, &phi, &xi, &ExtendedReal::Infinite).unwrap();
        assert!(rb.total.is_infinite());
    }

    #[test]
    fn validation() {
        assert!(OmegaMeasure::new(0.5, 0.2, 0.2, None, 0.5).is_err());
        assert!(OmegaMeasure::new(0.0, 0.0, 1.0, None, 1.0).is_err());
        let m = OmegaMeasure::new(0.0, 1.0, 0.0, None, 0.9).unwrap();
        assert_eq!(m.ell(), 0.5);
    }

    #[test]
    fn spec_round_trip() {
        let s: OmegaSpec = toml_like();
        let phi = ProbabilityLaw::dyadic();
        let mu = s.build(&phi).unwrap();
        assert_eq!(mu.alphas(), (0.5, 0.25, 0.25));
    }

    fn toml_like() -> OmegaSpec {
        serde_json::from_str(r#"{"alpha1":0.5,"alpha2":0.25,"alpha3":0.25,"ell":0.3}"#).unwrap()
    }
}
