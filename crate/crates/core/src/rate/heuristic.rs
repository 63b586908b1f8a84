//! Heuristic reading of a finite-time empirical measure as an element of `Ω`.
//!
//! Momenta below `p_min` (typically `1/t`) count as zero. The slow mass is
//! split into a uniform-in-`q` part (its lowest bin level) and the rest,
//! whose extent gives `ℓ`. This is a diagnostic, not an estimator with
//! guarantees.

use serde::Serialize;

use crate::empirical::EmpiricalMeasure;

#[derive(Clone, Debug, Serialize)]
pub struct HeuristicOmega {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub ell: f64,
    pub p_min: f64,
    /// Mean momentum of the moving part.
    pub moving_mean: f64,
}

const BINS: usize = 50;

pub fn classify_heuristic(m: &EmpiricalMeasure<f64>, p_min: f64) -> HeuristicOmega {
    let mut moving = 0.0;
    let mut moving_p = 0.0;
    let mut dens = [0.0; BINS];
    for c in m.components() {
        if c.momentum >= p_min {
            moving += c.weight;
            moving_p += c.weight * c.momentum;
            continue;
        }
        for (k, d) in dens.iter_mut().enumerate() {
            let (a, b) = (k as f64 / BINS as f64, (k + 1) as f64 / BINS as f64);
            let share = if c.q_hi > c.q_lo {
                (c.q_hi.min(b) - c.q_lo.max(a)).max(0.0) / (c.q_hi - c.q_lo)
            } else if c.q_lo >= a && c.q_lo < b {
                1.0
            } else {
                0.0
            };
            *d += c.weight * share * BINS as f64;
        }
    }
    let floor = dens.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha2 = floor;
    let slow: f64 = dens.iter().sum::<f64>() / BINS as f64;
    let alpha3 = (slow - alpha2).max(0.0);
    let ell = if alpha3 > 1e-12 {
        let last = dens.iter().rposition(|d| d - floor > 1e-9 * slow.max(1e-300)).unwrap_or(0);
        (last + 1) as f64 / BINS as f64
    } else {
        0.5
    };
    HeuristicOmega {
        alpha1: moving,
        alpha2,
        alpha3,
        ell: ell.min(1.0 - 1.0 / BINS as f64),
        p_min,
        moving_mean: if moving > 0.0 { moving_p / moving } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::Component;

    #[test]
    fn splits_frozen_and_wall_mass() {
        let comps = vec![
            Component { momentum: 2.0, q_lo: 0.0, q_hi: 1.0, weight: 0.5 },
            Component { momentum: 1e-6, q_lo: 0.0, q_hi: 1.0, weight: 0.2 },
            Component { momentum: 1e-7, q_lo: 0.0, q_hi: 0.3, weight: 0.3 },
        ];
        let m = EmpiricalMeasure::from_components(comps, None).unwrap();
        let h = classify_heuristic(&m, 1e-3);
        assert!((h.alpha1 - 0.5).abs() < 1e-12);
        assert!((h.alpha2 - 0.2).abs() < 1e-9);
        assert!((h.alpha3 - 0.3).abs() < 1e-9);
        assert!((h.ell - 0.3).abs() < 1e-9);
    }
}
