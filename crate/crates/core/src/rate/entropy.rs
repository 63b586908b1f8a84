//! Relative entropy `H(ν|φ)` of laws on `(0, ∞)`.

use crate::error::Result;
use crate::laws::{expectation, ProbabilityLaw, Repr};
use crate::numerics::KahanSum;
use crate::scalar::ExtendedReal;

fn atoms_of(law: &ProbabilityLaw, out: &mut Vec<f64>) {
    match law.repr() {
        Repr::Atomic(a) => out.extend(a.atoms()),
        Repr::Density(_) => {}
        Repr::Mixture(c) => c.iter().for_each(|(_, l)| atoms_of(l, out)),
    }
}

fn continuous_support(law: &ProbabilityLaw) -> Option<(f64, f64)> {
    match law.repr() {
        Repr::Atomic(_) => None,
        Repr::Density(d) => Some(d.support()),
        Repr::Mixture(c) => c
            .iter()
            .filter_map(|(_, l)| continuous_support(l))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1))),
    }
}

/// `H(ν|φ) = ∫ ν log(dν/dφ)`, `+∞` when `ν` is not absolutely continuous
/// with respect to `φ`.
pub fn relative_entropy(nu: &ProbabilityLaw, phi: &ProbabilityLaw) -> Result<ExtendedReal> {
    let mut atoms = Vec::new();
    atoms_of(nu, &mut atoms);
    for &x in &atoms {
        let (is_atom, lw) = phi.log_point_density(x);
        if (!is_atom || lw == f64::NEG_INFINITY) && nu.log_point_density(x).1 > f64::NEG_INFINITY {
            return Ok(ExtendedReal::Infinite);
        }
    }
    if let Some((lo, hi)) = continuous_support(nu) {
        match continuous_support(phi) {
            Some((plo, phi_hi)) if plo <= lo && hi <= phi_hi => {}
            _ => return Ok(ExtendedReal::Infinite),
        }
    }
    if let Some(a) = nu.as_atomic() {
        let mut sum = KahanSum::new();
        for (x, lw) in a.points() {
            if lw > f64::NEG_INFINITY {
                sum.add(lw.exp() * nu.log_density_ratio(phi, x));
            }
        }
        return Ok(ExtendedReal::Finite(sum.value().max(0.0)));
    }
    let log_ratio = |x: f64| {
        if nu.log_point_density(x).1 == f64::NEG_INFINITY {
            0.0
        } else {
            nu.log_density_ratio(phi, x)
        }
    };
    Ok(match expectation(nu, &log_ratio)? {
        ExtendedReal::Finite(h) => ExtendedReal::Finite(h.max(0.0)),
        ExtendedReal::Infinite => ExtendedReal::Infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_against_two_atoms() {
        let nu = ProbabilityLaw::dirac(1.0).unwrap();
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let h = relative_entropy(&nu, &phi).unwrap().to_f64();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        assert_eq!(relative_entropy(&phi, &phi).unwrap(), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn missing_atom_gives_infinity() {
        let nu = ProbabilityLaw::atomic(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let phi = ProbabilityLaw::atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert!(relative_entropy(&nu, &phi).unwrap().is_infinite());
        let d = ProbabilityLaw::polynomial(2.0).unwrap();
        assert!(relative_entropy(&d, &phi).unwrap().is_infinite());
        assert!(relative_entropy(&phi, &d).unwrap().is_infinite());
    }

    #[test]
    fn exponential_interarrival_pair() {
        // τ ~ Exp(λ₁) against τ ~ Exp(λ₀).
        for (l0, l1) in [(1.0, 2.0), (2.0, 0.5), (1.5, 1.5)] {
            let phi = ProbabilityLaw::exp_interarrival(l0).unwrap();
            let nu = ProbabilityLaw::exp_interarrival(l1).unwrap();
            let exact: f64 = (l1 / l0).ln() + l0 / l1 - 1.0;
            let h = relative_entropy(&nu, &phi).unwrap().to_f64();
            assert!((h - exact).abs() < 1e-6, "{l0} {l1}: {h} vs {exact}");
        }
    }

    #[test]
    fn polynomial_pair() {
        // κ p^{κ-1} against uniform: log κ + (κ-1)/κ · (-1).
        let nu = ProbabilityLaw::polynomial(3.0).unwrap();
        let phi = ProbabilityLaw::polynomial(1.0).unwrap();
        let exact = 3f64.ln() - 2.0 / 3.0;
        let h = relative_entropy(&nu, &phi).unwrap().to_f64();
        assert!((h - exact).abs() < 1e-8, "{h} vs {exact}");
    }
}
