//! Rate functionals `I`, `Ī` on measures of the form
//! `α₁ π(dp) dq + α₂ δ₀(dp) dq + α₃ δ₀(dp) λ_ℓ(dq)`.

mod approximation;
mod combine;
mod entropy;
mod fixture;
mod heuristic;
mod omega;
mod variational;

pub use approximation::{default_margin, density_approximation};
pub use combine::{combine_i, combine_i_bar, exponent_gap, gap, RateInputs, RateValue};
pub use entropy::relative_entropy;
pub use fixture::{constant_tilt, test_function_fixture, FixtureSummary, LambdaFixture};
pub use heuristic::{classify_heuristic, HeuristicOmega};
pub use omega::{rate_gap, rate_i, rate_i_bar, OmegaMeasure, OmegaSpec};
pub use variational::{
    candidate_value, dv_rate, optimizer_candidate, random_candidates, variational_entropy, Candidate, SpeedFn,
    VariationalReport,
};

use serde::Serialize;

/// One line of a rate table.
#[derive(Clone, Debug, Serialize)]
pub struct RateRecord {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub ell: f64,
    pub mean_momentum: f64,
    pub xi: crate::ExtendedReal,
    pub xi_bar: crate::ExtendedReal,
    #[serde(rename = "I")]
    pub i: crate::ExtendedReal,
    #[serde(rename = "I_bar")]
    pub i_bar: crate::ExtendedReal,
    pub gap: crate::ExtendedReal,
}

impl RateRecord {
    pub fn evaluate(
        mu: &OmegaMeasure,
        phi: &crate::ProbabilityLaw,
        xi: &crate::ExtendedReal,
        xi_bar: &crate::ExtendedReal,
    ) -> crate::Result<Self> {
        let (alpha1, alpha2, alpha3) = mu.alphas();
        Ok(Self {
            alpha1,
            alpha2,
            alpha3,
            ell: mu.ell(),
            mean_momentum: mu.mean_momentum(),
            xi: xi.clone(),
            xi_bar: xi_bar.clone(),
            i: rate_i(mu, phi, xi)?.total,
            i_bar: rate_i_bar(mu, phi, xi, xi_bar)?.total,
            gap: rate_gap(mu, xi, xi_bar)?,
        })
    }
}
