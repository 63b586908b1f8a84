//! Bounded-Lipschitz distance through a fixed family of test functions.
//!
//! The family is the tent functions `h_i(q)`, `h_j(u)` with nodes `k/15`
//! (`u = p/(1+p)` compactifies momentum) together with their tensor
//! products `h_i(q) h_j(u)`. Each member has sup norm `1` and Lipschitz
//! constant `15` for the metric `|q - q'| + |p - p'|`, so after dividing by
//! `16` it lies in the unit BL ball and the result is a lower bound on the
//! true BL distance.

use super::EmpiricalMeasure;
use crate::error::Result;
use crate::laws::{expectation, ProbabilityLaw};

pub const BL_NODES: usize = 16;
const WIDTH: f64 = 1.0 / (BL_NODES as f64 - 1.0);
const SCALE: f64 = 1.0 / (1.0 + 1.0 / WIDTH);

fn hat(k: usize, x: f64) -> f64 {
    let c = k as f64 * WIDTH;
    (1.0 - (x - c).abs() / WIDTH).max(0.0)
}

/// `∫_{-∞}^x h_k`.
fn hat_primitive(k: usize, x: f64) -> f64 {
    let c = k as f64 * WIDTH;
    let w = WIDTH;
    if x <= c - w {
        0.0
    } else if x <= c {
        (x - c + w).powi(2) / (2.0 * w)
    } else if x <= c + w {
        w / 2.0 + (x - c) - (x - c).powi(2) / (2.0 * w)
    } else {
        w
    }
}

/// Average of `h_k` over `[lo, hi)`, or its value at `lo` for a point.
fn hat_average(k: usize, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        hat(k, lo)
    } else {
        (hat_primitive(k, hi) - hat_primitive(k, lo)) / (hi - lo)
    }
}

fn compactify(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        p / (1.0 + p)
    }
}

/// Integrals of every member of the family.
#[derive(Clone, Debug, PartialEq)]
pub struct BlSignature {
    pub tensor: [[f64; BL_NODES]; BL_NODES],
    pub q_marginal: [f64; BL_NODES],
    pub p_marginal: [f64; BL_NODES],
}

impl BlSignature {
    fn zero() -> Self {
        Self {
            tensor: [[0.0; BL_NODES]; BL_NODES],
            q_marginal: [0.0; BL_NODES],
            p_marginal: [0.0; BL_NODES],
        }
    }

    pub fn of_measure(m: &EmpiricalMeasure<f64>) -> Self {
        let mut s = Self::zero();
        for c in m.components() {
            let u = compactify(c.momentum);
            let qa: Vec<f64> = (0..BL_NODES).map(|i| hat_average(i, c.q_lo, c.q_hi)).collect();
            let pu: Vec<f64> = (0..BL_NODES).map(|j| hat(j, u)).collect();
            for i in 0..BL_NODES {
                s.q_marginal[i] += c.weight * qa[i];
                s.p_marginal[i] += c.weight * pu[i];
                for j in 0..BL_NODES {
                    s.tensor[i][j] += c.weight * qa[i] * pu[j];
                }
            }
        }
        s
    }

    /// Signature of `dq ⊗ π` for any law `π`.
    pub fn of_product(pi: &ProbabilityLaw) -> Result<Self> {
        let mut s = Self::zero();
        let qa: Vec<f64> = (0..BL_NODES).map(|i| hat_average(i, 0.0, 1.0)).collect();
        for j in 0..BL_NODES {
            let e = expectation(pi, &|p| hat(j, compactify(p)))?.to_f64();
            s.p_marginal[j] = e;
            for i in 0..BL_NODES {
                s.tensor[i][j] = qa[i] * e;
            }
        }
        s.q_marginal.copy_from_slice(&qa);
        Ok(s)
    }

    /// `Σ wₖ sₖ`, the signature of the corresponding mixture.
    pub fn combine(parts: &[(f64, BlSignature)]) -> Self {
        let mut s = Self::zero();
        for (w, p) in parts {
            for i in 0..BL_NODES {
                s.q_marginal[i] += w * p.q_marginal[i];
                s.p_marginal[i] += w * p.p_marginal[i];
                for j in 0..BL_NODES {
                    s.tensor[i][j] += w * p.tensor[i][j];
                }
            }
        }
        s
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..BL_NODES {
            d = d.max((self.q_marginal[i] - other.q_marginal[i]).abs());
            d = d.max((self.p_marginal[i] - other.p_marginal[i]).abs());
            for j in 0..BL_NODES {
                d = d.max((self.tensor[i][j] - other.tensor[i][j]).abs());
            }
        }
        d * SCALE
    }
}

pub fn bl_distance(a: &EmpiricalMeasure<f64>, b: &EmpiricalMeasure<f64>) -> f64 {
    BlSignature::of_measure(a).distance(&BlSignature::of_measure(b))
}

/// Distance between `μ` and `dq ⊗ π`.
pub fn bl_distance_to_product(m: &EmpiricalMeasure<f64>, pi: &ProbabilityLaw) -> Result<f64> {
    Ok(BlSignature::of_measure(m).distance(&BlSignature::of_product(pi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{product_target, Component};
    use crate::numerics::integrate_finite;

    #[test]
    fn hat_average_matches_quadrature() {
        for k in [0, 3, 15] {
            for (lo, hi) in [(0.0, 1.0), (0.1, 0.37), (0.9, 0.95)] {
                let mut cuts = vec![lo, hi];
                cuts.extend((0..BL_NODES).map(|i| i as f64 * WIDTH).filter(|x| *x > lo && *x < hi));
                cuts.sort_by(f64::total_cmp);
                let q: f64 = cuts
                    .windows(2)
                    .map(|w| integrate_finite(|x| hat(k, x), w[0], w[1], 1e-14).value)
                    .sum::<f64>()
                    / (hi - lo);
                assert!((hat_average(k, lo, hi) - q).abs() < 1e-10, "k={k} [{lo},{hi})");
            }
        }
    }

    #[test]
    fn product_signatures_agree() {
        let pi = ProbabilityLaw::atomic(&[(1.0, 0.4), (3.0, 0.6)]).unwrap();
        let a = BlSignature::of_measure(&product_target(&pi).unwrap());
        let b = BlSignature::of_product(&pi).unwrap();
        assert!(a.distance(&b) < 1e-14);
    }

    #[test]
    fn distance_is_bounded_by_tv() {
        let mk = |p: f64, hi: f64| {
            EmpiricalMeasure::from_components(
                vec![Component {
                    momentum: p,
                    q_lo: 0.0,
                    q_hi: hi,
                    weight: 1.0,
                }],
                None,
            )
            .unwrap()
        };
        let (a, b) = (mk(1.0, 1.0), mk(1.5, 0.5));
        let bl = bl_distance(&a, &b);
        assert!(bl > 0.0 && bl <= 2.0 * a.tv_distance(&b) * SCALE + 1e-15);
        assert_eq!(bl_distance(&a, &a), 0.0);
    }
}
