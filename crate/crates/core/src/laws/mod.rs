//! Probability laws on `(0, ∞)` for speeds and interarrival times.
//!
//! A law is atomic, absolutely continuous, or a finite mixture of those. The
//! speed law `φ` and the interarrival law `ψ` are related by `x ↦ 1/x`
//! ([`speed_to_interarrival`]). Atomic weights are stored as logarithms so
//! laws such as the dyadic one, whose weights `e^{-2^j}` underflow quickly,
//! remain usable for tail queries.

mod atomic;
mod density;
mod spec;
mod tail;
mod transform;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use atomic::{Accumulation, AtomicLaw};
pub use density::DensityLaw;
pub use spec::{LawSpec, MixtureComponentSpec};
pub use tail::{
    compute_xi, default_epsilons, estimate_xi_bar, exp_moment_is_finite, expectation,
    log_expectation_exp, window_probability, TailExponentReport, XiBarRow, C_MAX, DEFAULT_DELTAS,
};
pub use transform::{
    interarrival_to_speed, reweight, size_bias, size_bias_inverse, speed_to_interarrival,
    tilt_by_boundary_function,
};

use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Depth of the dyadic law `Z⁻¹ Σ_j e^{-2^j} δ_{2^{-j}}`: atoms `j = 0..=DYADIC_DEPTH`.
pub const DYADIC_DEPTH: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawRole {
    Speed,
    Interarrival,
}

impl LawRole {
    pub fn flipped(self) -> Self {
        match self {
            Self::Speed => Self::Interarrival,
            Self::Interarrival => Self::Speed,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Repr {
    Atomic(AtomicLaw),
    Density(DensityLaw),
    Mixture(Vec<(f64, ProbabilityLaw)>),
}

/// A probability law on `(0, ∞)`. Immutable and cheap to share.
#[derive(Clone)]
pub struct ProbabilityLaw {
    repr: Repr,
    role: LawRole,
    name: String,
}

impl fmt::Debug for ProbabilityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProbabilityLaw")
            .field("name", &self.name)
            .field("role", &self.role)
            .field("repr", &self.repr)
            .finish()
    }
}

impl ProbabilityLaw {
    pub(crate) fn from_parts(repr: Repr, role: LawRole, name: impl Into<String>) -> Self {
        Self {
            repr,
            role,
            name: name.into(),
        }
    }

    /// Finite atomic speed law from `(atom, weight)` pairs.
    pub fn atomic(pairs: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::from_parts(
            Repr::Atomic(AtomicLaw::new(pairs)?),
            LawRole::Speed,
            "atomic",
        ))
    }

    /// The single atom `δ_v`.
    pub fn dirac(v: f64) -> Result<Self> {
        Self::atomic(&[(v, 1.0)])
    }

    /// `Z⁻¹ Σ_{j≥0} e^{-2^j} δ_{2^{-j}}`, truncated at [`DYADIC_DEPTH`].
    pub fn dyadic() -> Self {
        let atoms: Vec<f64> = (0..=DYADIC_DEPTH).map(|j| 0.5f64.powi(j as i32)).collect();
        let logw: Vec<f64> = (0..=DYADIC_DEPTH).map(|j| -(2f64.powi(j as i32))).collect();
        let law = AtomicLaw::from_log_weights(atoms, logw, Accumulation::AtZero)
            .expect("dyadic atoms are valid");
        Self::from_parts(Repr::Atomic(law), LawRole::Speed, "dyadic")
    }

    /// Speed law `ξ₀ e^{-ξ₀/p} p⁻² dp`: interarrival times are `Exp(ξ₀)`.
    pub fn exp_interarrival(xi0: f64) -> Result<Self> {
        Ok(Self::from_parts(
            Repr::Density(DensityLaw::exp_interarrival(xi0)?),
            LawRole::Speed,
            format!("exp_interarrival({xi0})"),
        ))
    }

    /// Speed law `κ p^{κ-1} dp` on `(0, 1]`.
    pub fn polynomial(kappa: f64) -> Result<Self> {
        Ok(Self::from_parts(
            Repr::Density(DensityLaw::polynomial(kappa)?),
            LawRole::Speed,
            format!("polynomial({kappa})"),
        ))
    }

    pub fn mixture(components: Vec<(f64, ProbabilityLaw)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidLaw("empty mixture".into()));
        }
        if components.iter().any(|(w, _)| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidLaw("mixture weights must be positive".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let role = components[0].1.role;
        if components.iter().any(|(_, l)| l.role != role) {
            return Err(Error::InvalidLaw("mixture mixes speed and interarrival laws".into()));
        }
        // A mixture of atomic laws is atomic.
        if components
            .iter()
            .all(|(_, l)| matches!(l.repr, Repr::Atomic(_)))
        {
            let mut atoms = Vec::new();
            let mut logw = Vec::new();
            let mut accumulation = Accumulation::None;
            for (w, l) in &components {
                let a = l.as_atomic().expect("checked atomic");
                if a.accumulation() != Accumulation::None {
                    accumulation = a.accumulation();
                }
                for (x, lw) in a.points() {
                    atoms.push(x);
                    logw.push(lw + w.ln());
                }
            }
            let law = AtomicLaw::from_log_weights(atoms, logw, accumulation)?;
            return Ok(Self::from_parts(Repr::Atomic(law), role, "mixture"));
        }
        Ok(Self::from_parts(Repr::Mixture(components), role, "mixture"))
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn role(&self) -> LawRole {
        self.role
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_role(mut self, role: LawRole) -> Self {
        self.role = role;
        self
    }

    pub fn as_atomic(&self) -> Option<&AtomicLaw> {
        match &self.repr {
            Repr::Atomic(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        self.as_atomic().is_some()
    }

    /// Draws one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.repr {
            Repr::Atomic(a) => a.sample(rng),
            Repr::Density(d) => d.sample(rng),
            Repr::Mixture(c) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (w, l) in c {
                    acc += w;
                    if u < acc {
                        return l.sample(rng);
                    }
                }
                c.last().expect("non-empty mixture").1.sample(rng)
            }
        }
    }

    /// `log P(X ∈ [lo, hi))`, `-∞` for an empty window.
    pub fn log_mass_in(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return f64::NEG_INFINITY;
        }
        match &self.repr {
            Repr::Atomic(a) => a.log_mass_in(lo, hi),
            Repr::Density(d) => d.log_mass_in(lo, hi),
            Repr::Mixture(c) => log_sum_exp(c.iter().map(|(w, l)| w.ln() + l.log_mass_in(lo, hi))),
        }
    }

    /// `P(X ∈ [lo, hi))`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.log_mass_in(lo, hi).exp()
    }

    /// `log P(X ≤ y)`.
    pub fn log_cdf_closed(&self, y: f64) -> f64 {
        match &self.repr {
            Repr::Atomic(a) => a.log_cdf_closed(y),
            Repr::Density(d) => d.log_cdf(y),
            Repr::Mixture(c) => log_sum_exp(c.iter().map(|(w, l)| w.ln() + l.log_cdf_closed(y))),
        }
    }

    /// Draws from the law conditioned on `[lo, hi)`.
    pub fn sample_conditioned<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
        let log_mass = self.log_mass_in(lo, hi);
        if log_mass == f64::NEG_INFINITY {
            return Err(Error::EmptyWindow { lo, hi });
        }
        match &self.repr {
            Repr::Atomic(a) => a.sample_conditioned(lo, hi, rng),
            Repr::Density(d) => d.sample_conditioned(lo, hi, rng),
            Repr::Mixture(c) => {
                let logs: Vec<f64> = c
                    .iter()
                    .map(|(w, l)| w.ln() + l.log_mass_in(lo, hi) - log_mass)
                    .collect();
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for ((_, l), lw) in c.iter().zip(&logs) {
                    acc += lw.exp();
                    if u < acc && *lw > f64::NEG_INFINITY {
                        return l.sample_conditioned(lo, hi, rng);
                    }
                }
                let (_, l) = c
                    .iter()
                    .zip(&logs)
                    .rfind(|(_, lw)| **lw > f64::NEG_INFINITY)
                    .expect("some component charges the window")
                    .0;
                l.sample_conditioned(lo, hi, rng)
            }
        }
    }

    /// `log` of the density of this law with respect to `other` at `x`
    /// (both must share their dominating measure at `x`). `+∞` when `other`
    /// does not charge `x` but `self` does.
    pub fn log_density_ratio(&self, other: &ProbabilityLaw, x: f64) -> f64 {
        let a = self.log_point_density(x);
        let b = other.log_point_density(x);
        match (a.0, b.0) {
            (ka, kb) if ka == kb => {
                if b.1 == f64::NEG_INFINITY {
                    if a.1 == f64::NEG_INFINITY {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    a.1 - b.1
                }
            }
            // An atom against a continuous part, or vice versa.
            (true, false) => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        }
    }

    /// (is_atom, log mass-or-density) at `x`; atoms dominate densities.
    pub(crate) fn log_point_density(&self, x: f64) -> (bool, f64) {
        match &self.repr {
            Repr::Atomic(a) => (true, a.log_weight_at(x)),
            Repr::Density(d) => (false, d.log_pdf(x)),
            Repr::Mixture(c) => {
                let atom = log_sum_exp(c.iter().filter_map(|(w, l)| match &l.repr {
                    Repr::Atomic(a) => Some(w.ln() + a.log_weight_at(x)),
                    _ => None,
                }));
                if atom > f64::NEG_INFINITY {
                    return (true, atom);
                }
                let dens = log_sum_exp(c.iter().filter_map(|(w, l)| {
                    let (is_atom, v) = l.log_point_density(x);
                    (!is_atom).then_some(w.ln() + v)
                }));
                (false, dens)
            }
        }
    }

    /// Mean `∫ x law(dx)`, `+∞` if it diverges.
    pub fn mean(&self) -> Result<crate::ExtendedReal> {
        expectation(self, &|x| x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn atomic_rejects_bad_input() {
        assert!(ProbabilityLaw::atomic(&[(0.0, 1.0)]).is_err());
        assert!(ProbabilityLaw::atomic(&[(1.0, 0.5)]).is_err());
        assert!(ProbabilityLaw::atomic(&[(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(ProbabilityLaw::atomic(&[]).is_err());
    }

    #[test]
    fn single_atom_always_sampled() {
        let law = ProbabilityLaw::dirac(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| law.sample(&mut rng) == 1.0));
    }

    #[test]
    fn mixture_of_atomics_collapses() {
        let a = ProbabilityLaw::dirac(1.0).unwrap();
        let b = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let m = ProbabilityLaw::mixture(vec![(0.5, a), (0.5, b)]).unwrap();
        let at = m.as_atomic().unwrap();
        let pts: Vec<_> = at.points().map(|(x, lw)| (x, lw.exp())).collect();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].1 - 0.75).abs() < 1e-15);
        assert!((pts[1].1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mixed_mixture_samples_and_masses() {
        let m = ProbabilityLaw::mixture(vec![
            (0.5, ProbabilityLaw::dirac(2.0).unwrap()),
            (0.5, ProbabilityLaw::polynomial(3.0).unwrap()),
        ])
        .unwrap();
        assert!((m.mass_in(0.0, 10.0) - 1.0).abs() < 1e-12);
        assert!((m.mass_in(2.0, 2.5) - 0.5).abs() < 1e-12);
        assert!((m.mass_in(0.0, 0.5) - 0.5 * 0.125).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = m.sample_conditioned(1.5, 3.0, &mut rng).unwrap();
        assert_eq!(x, 2.0);
    }

    #[test]
    fn conditioned_sampling_reports_empty_window() {
        let law = ProbabilityLaw::dyadic();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eps = 3.0 * 0.5f64.powi(8);
        assert!(matches!(
            law.sample_conditioned(eps * 0.7, eps * 1.3, &mut rng),
            Err(Error::EmptyWindow { .. })
        ));
        let eps = 0.5f64.powi(8);
        assert_eq!(law.sample_conditioned(eps * 0.6, eps * 1.4, &mut rng).unwrap(), eps);
    }
}
