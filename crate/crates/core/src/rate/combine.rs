//! Assembling `I` and `Ī` from their parts, generic over the scalar type.

use serde::Serialize;

use crate::scalar::{ExtendedReal, Scalar};

/// `total = entropy_part + xi_part`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateValue<T: Scalar = f64> {
    pub total: ExtendedReal<T>,
    /// `μ(p) H(π̃|φ)`.
    pub entropy_part: ExtendedReal<T>,
    /// Cost of the frozen and wall-stuck parts.
    pub xi_part: ExtendedReal<T>,
}

impl<T: Scalar> RateValue<T> {
    pub fn new(entropy_part: ExtendedReal<T>, xi_part: ExtendedReal<T>) -> Self {
        Self {
            total: entropy_part.clone() + xi_part.clone(),
            entropy_part,
            xi_part,
        }
    }

    pub fn infinite() -> Self {
        Self::new(ExtendedReal::Infinite, ExtendedReal::Infinite)
    }
}

/// Weights entering the rate functionals: `μ(p) = α₁ π(p)`, `α₂`, `α₃`, `ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateInputs<T: Scalar = f64> {
    pub mean_momentum: T,
    pub entropy: ExtendedReal<T>,
    pub alpha2: T,
    pub alpha3: T,
    pub ell: T,
}

impl<T: Scalar> RateInputs<T> {
    /// `ℓ⁻¹`, infinite at `ℓ = 0`.
    pub fn ell_inv(&self) -> ExtendedReal<T> {
        ExtendedReal::Finite(self.ell.clone()).recip()
    }

    fn entropy_part(&self) -> ExtendedReal<T> {
        ExtendedReal::Finite(self.mean_momentum.clone()) * self.entropy.clone()
    }

    fn wall_weight(&self) -> ExtendedReal<T> {
        ExtendedReal::Finite(self.alpha3.clone()) * self.ell_inv()
    }
}

/// `μ(p) H(π̃|φ) + (α₂ + α₃ ℓ⁻¹) ξ`.
pub fn combine_i<T: Scalar>(r: &RateInputs<T>, xi: &ExtendedReal<T>) -> RateValue<T> {
    let xi_part = (ExtendedReal::Finite(r.alpha2.clone()) + r.wall_weight()) * xi.clone();
    RateValue::new(r.entropy_part(), xi_part)
}

/// `μ(p) H(π̃|φ) + α₂ ξ + α₃ ℓ⁻¹ ξ̄`, assembled as `I + J` when `ξ̄ ≥ ξ` so
/// that `Ī ≥ I` survives rounding.
pub fn combine_i_bar<T: Scalar>(r: &RateInputs<T>, xi: &ExtendedReal<T>, xi_bar: &ExtendedReal<T>) -> RateValue<T> {
    let xi_part = match gap(r, xi, xi_bar) {
        Some(j) => combine_i(r, xi).xi_part + j,
        None => ExtendedReal::Finite(r.alpha2.clone()) * xi.clone() + r.wall_weight() * xi_bar.clone(),
    };
    RateValue::new(r.entropy_part(), xi_part)
}

/// `ξ̄ - ξ` with `∞ - ∞ = 0`; `None` if `ξ̄ < ξ`.
pub fn exponent_gap<T: Scalar>(xi: &ExtendedReal<T>, xi_bar: &ExtendedReal<T>) -> Option<ExtendedReal<T>> {
    if xi.is_infinite() && xi_bar.is_infinite() {
        return Some(ExtendedReal::zero());
    }
    xi_bar.checked_sub(xi)
}

/// `J = α₃ ℓ⁻¹ (ξ̄ - ξ)`, so that `Ī = I + J`.
pub fn gap<T: Scalar>(r: &RateInputs<T>, xi: &ExtendedReal<T>, xi_bar: &ExtendedReal<T>) -> Option<ExtendedReal<T>> {
    Some(r.wall_weight() * exponent_gap(xi, xi_bar)?)
}
