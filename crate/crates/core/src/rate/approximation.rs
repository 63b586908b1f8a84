//! Approximation of a measure of finite `Ī` by measures with no frozen
//! part and a wall part of positive width.

use std::sync::Arc;

use super::omega::{rate_i_bar, OmegaMeasure};
use crate::error::{Error, Result};
use crate::laws::{reweight, ProbabilityLaw};
use crate::scalar::ExtendedReal;

/// Default margin `ε = ξ/10` (zero when `ξ` is zero or infinite).
pub fn default_margin(xi: &ExtendedReal) -> f64 {
    match xi {
        ExtendedReal::Finite(x) => 0.1 * x,
        ExtendedReal::Infinite => 0.0,
    }
}

/// `π` conditioned on `(cut, ∞)`.
fn truncate_below(pi: &ProbabilityLaw, cut: f64) -> Result<ProbabilityLaw> {
    let (law, _) = reweight(pi, Arc::new(move |p| if p > cut { 0.0 } else { f64::NEG_INFINITY }))?;
    Ok(law.with_name(format!("{}|({cut}, ∞)", pi.name())))
}

/// `e^{c/p} 1[p ≤ cut] γ(dp)` normalised, with `γ ∝ p⁻¹ φ`. When that
/// normaliser diverges (`ψ` with infinite mean near the wall) `φ` itself
/// is tilted instead.
fn slow_component(phi: &ProbabilityLaw, c: f64, cut: f64) -> Result<ProbabilityLaw> {
    let biased = reweight(
        phi,
        Arc::new(move |p: f64| if p <= cut { c / p - p.ln() } else { f64::NEG_INFINITY }),
    );
    let law = match biased {
        Ok((law, _)) => law,
        Err(Error::DivergentNormalizer) => {
            reweight(phi, Arc::new(move |p: f64| if p <= cut { c / p } else { f64::NEG_INFINITY }))?.0
        }
        Err(e) => return Err(e),
    };
    Ok(law.with_name(format!("slow({c}, ≤{cut})")))
}

/// The `n`-th measure of the approximating sequence. `eps` defaults to
/// [`default_margin`].
pub fn density_approximation(
    mu: &OmegaMeasure,
    n: u32,
    phi: &ProbabilityLaw,
    xi: &ExtendedReal,
    xi_bar: &ExtendedReal,
    eps: Option<f64>,
) -> Result<OmegaMeasure> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if rate_i_bar(mu, phi, xi, xi_bar)?.total.is_infinite() {
        return Err(Error::InfiniteRate);
    }
    let (a1, a2, a3) = mu.alphas();
    let step = 1.0 / n as f64;
    let widen = |ell: f64| -> Result<f64> {
        let l = ell + step;
        if l < 1.0 {
            Ok(l)
        } else {
            Err(Error::InvalidParameter(format!("n = {n} too small for ℓ = {ell}")))
        }
    };
    if a1 + a2 == 0.0 {
        return OmegaMeasure::new(0.0, 0.0, 1.0, None, widen(mu.ell())?);
    }
    let ell = if a3 > 0.0 && mu.ell() == 0.0 { widen(0.0)? } else { mu.ell() };
    let mut parts = Vec::new();
    if a1 > 0.0 {
        parts.push((a1 / (a1 + a2), truncate_below(mu.pi(phi), step)?));
    }
    if a2 > 0.0 {
        let x = xi.finite().copied().ok_or(Error::InfiniteRate)?;
        let c = (x - eps.unwrap_or_else(|| default_margin(xi))).max(0.0);
        parts.push((a2 / (a1 + a2), slow_component(phi, c, step)?));
    }
    let pi_n = if parts.len() == 1 {
        parts.pop().expect("one part").1
    } else {
        let w = parts[0].0;
        parts[1].0 = 1.0 - w;
        ProbabilityLaw::mixture(parts)?
    };
    OmegaMeasure::new(a1 + a2, 0.0, a3, Some(pi_n), ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::compute_xi;

    #[test]
    fn wall_only_widens() {
        let phi = ProbabilityLaw::dyadic();
        let mu = OmegaMeasure::new(0.0, 0.0, 1.0, None, 0.25).unwrap();
        let xi = ExtendedReal::Finite(1.0);
        let m = density_approximation(&mu, 10, &phi, &xi, &xi, None).unwrap();
        assert!((m.ell() - 0.35).abs() < 1e-15);
        assert!(matches!(
            density_approximation(&mu, 10, &phi, &xi, &ExtendedReal::Infinite, None),
            Err(Error::InfiniteRate)
        ));
    }

    #[test]
    fn truncation_inactive_for_large_n() {
        let phi = ProbabilityLaw::atomic(&[(0.5, 0.5), (3.0, 0.5)]).unwrap();
        let pi = ProbabilityLaw::atomic(&[(0.5, 0.3), (3.0, 0.7)]).unwrap();
        let mu = OmegaMeasure::new(1.0, 0.0, 0.0, Some(pi.clone()), 0.5).unwrap();
        let xi = ExtendedReal::Infinite;
        let m = density_approximation(&mu, 10, &phi, &xi, &xi, None).unwrap();
        let a = m.pi(&phi).as_atomic().unwrap();
        let b = pi.as_atomic().unwrap();
        assert_eq!(a.atoms(), b.atoms());
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn frozen_mass_moves_to_slow_speeds() {
        let phi = ProbabilityLaw::dyadic();
        let xi = compute_xi(&phi, 1e-9).unwrap();
        let mu = OmegaMeasure::new(0.0, 1.0, 0.0, None, 0.5).unwrap();
        let target = rate_i_bar(&mu, &phi, &xi, &ExtendedReal::Infinite).unwrap().total.to_f64();
        let mut last = f64::INFINITY;
        for n in [8, 32, 128, 512] {
            let m = density_approximation(&mu, n, &phi, &xi, &ExtendedReal::Infinite, None).unwrap();
            assert_eq!(m.alphas(), (1.0, 0.0, 0.0));
            let r = rate_i_bar(&m, &phi, &xi, &ExtendedReal::Infinite).unwrap().total.to_f64();
            assert!(r <= target + 0.1 + 1e-9, "n={n}: {r}");
            let d = m.bl_distance(&mu).unwrap();
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert!(last < 0.01, "{last}");
    }
}
