//! Exact empirical measures of a path as finite mixtures of
//! uniform-in-`q` pieces at fixed momentum.
//!
//! A segment of the path spent at speed `p` between positions `a` and `b`
//! contributes the uniform law on `[a, b)` at momentum `p`, weighted by the
//! fraction of time spent there. Distances are computed on this
//! representation directly: total variation exactly on the common
//! refinement, bounded-Lipschitz through a fixed family of hat functions.

mod bl;
mod histogram;

use std::cmp::Ordering;

use serde::Serialize;

pub use bl::{bl_distance, bl_distance_to_product, BlSignature, BL_NODES};
pub use histogram::{histogram, write_histogram_csv, HistogramCell};

use crate::error::{Error, Result};
use crate::laws::ProbabilityLaw;
use crate::numerics::{gauss_legendre, KahanSum};
use crate::process::{Start, Trajectory};
use crate::scalar::Scalar;

/// Uniform law on `[q_lo, q_hi)` at a fixed momentum; a point mass at
/// `q_lo` when `q_lo == q_hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component<T> {
    pub momentum: T,
    pub q_lo: T,
    pub q_hi: T,
    pub weight: T,
}

impl<T: Scalar> Component<T> {
    pub fn is_point(&self) -> bool {
        self.q_lo == self.q_hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure<T: Scalar> {
    components: Vec<Component<T>>,
    total_time: Option<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureDistanceReport {
    pub tv: f64,
    pub bl: f64,
    /// Hat functions per axis in the BL family.
    pub bl_grid: usize,
}

fn cmp<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("comparable scalars")
}

impl<T: Scalar> EmpiricalMeasure<T> {
    /// Mixture from explicit components; weights must sum to one.
    pub fn from_components(components: Vec<Component<T>>, total_time: Option<T>) -> Result<Self> {
        let mut sum = KahanSum::new();
        for c in &components {
            if c.weight.is_negative() || c.momentum.is_negative() {
                return Err(Error::InvalidParameter("negative weight or momentum".into()));
            }
            if c.q_lo.is_negative() || c.q_hi > T::one() || c.q_hi < c.q_lo {
                return Err(Error::InvalidParameter("q-interval outside [0, 1]".into()));
            }
            sum.add(c.weight.clone());
        }
        if (sum.value().lossy_f64() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {}",
                sum.value().lossy_f64()
            )));
        }
        Ok(Self {
            components,
            total_time,
        })
    }

    /// Occupation measure of the path over `[a, b]`, normalised by `b - a`.
    pub fn from_window(traj: &Trajectory<T>, a: &T, b: &T) -> Result<Self> {
        if !(*b > *a) || a.is_negative() {
            return Err(Error::InvalidParameter("empty time window".into()));
        }
        if *b > traj.horizon() {
            return Err(Error::HorizonExceeded {
                t: b.lossy_f64(),
                covered: traj.horizon().lossy_f64(),
            });
        }
        let len = b.clone() - a.clone();
        let epochs = traj.epochs();
        let mut comps = Vec::new();
        let mut begin = T::zero();
        for (k, end) in epochs.iter().enumerate() {
            if begin >= *b {
                break;
            }
            if *end > *a {
                let lo_t = T::max_of(begin.clone(), a.clone());
                let hi_t = T::min_of(end.clone(), b.clone());
                let (p, q_at) = segment_motion(traj, k, &begin);
                let q_lo = q_at(&lo_t);
                let q_hi = if *end <= *b { T::one() } else { q_at(&hi_t) };
                let w = (hi_t - lo_t) / len.clone();
                if w.is_positive() {
                    comps.push(Component {
                        momentum: p,
                        q_lo,
                        q_hi,
                        weight: w,
                    });
                }
            }
            begin = end.clone();
        }
        Ok(Self {
            components: comps,
            total_time: Some(len),
        })
    }

    /// `μ_t` for a delayed path, `μ̄_t` for an undelayed one.
    pub fn from_trajectory(traj: &Trajectory<T>, t: &T) -> Result<Self> {
        Self::from_window(traj, &T::zero(), t)
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn total_time(&self) -> Option<&T> {
        self.total_time.as_ref()
    }

    pub fn total_weight(&self) -> T {
        let mut s = KahanSum::new();
        for c in &self.components {
            s.add(c.weight.clone());
        }
        s.value()
    }

    /// `∫ p μ(dq, dp)`.
    pub fn mean_momentum(&self) -> T {
        let mut s = KahanSum::new();
        for c in &self.components {
            s.add(c.weight.clone() * c.momentum.clone());
        }
        s.value()
    }

    /// `∫ f dμ` with eight-point Gauss–Legendre on each `q`-interval.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut s = KahanSum::<f64>::new();
        for c in &self.components {
            let (lo, hi, p) = (c.q_lo.lossy_f64(), c.q_hi.lossy_f64(), c.momentum.lossy_f64());
            let avg = if c.is_point() {
                f(lo, p)
            } else {
                gauss_legendre(|q| f(q, p), lo, hi) / (hi - lo)
            };
            s.add(c.weight.lossy_f64() * avg);
        }
        s.value()
    }

    /// `∫ g(p) μ(dq, dp)` in the scalar type.
    pub fn integrate_momentum<F: Fn(&T) -> T>(&self, g: F) -> T {
        let mut s = KahanSum::new();
        for c in &self.components {
            s.add(c.weight.clone() * g(&c.momentum));
        }
        s.value()
    }

    /// Time-weighted mixture of two occupation measures over consecutive
    /// windows: the occupation measure of the concatenated window.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let (ta, tb) = match (&self.total_time, &other.total_time) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => return Err(Error::InvalidParameter("merge needs time-weighted measures".into())),
        };
        let total = ta.clone() + tb.clone();
        let wa = ta / total.clone();
        let wb = tb / total.clone();
        let mut comps: Vec<Component<T>> = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight.clone() * wa.clone(),
                ..c.clone()
            })
            .collect();
        comps.extend(other.components.iter().map(|c| Component {
            weight: c.weight.clone() * wb.clone(),
            ..c.clone()
        }));
        Ok(Self {
            components: comps,
            total_time: Some(total),
        })
    }

    /// Components grouped by momentum, with identical intervals merged.
    fn grouped(&self) -> Vec<(T, Vec<(T, T, T)>)> {
        let mut comps: Vec<&Component<T>> = self.components.iter().filter(|c| !c.weight.is_zero()).collect();
        comps.sort_by(|a, b| {
            cmp(&a.momentum, &b.momentum)
                .then_with(|| cmp(&a.q_lo, &b.q_lo))
                .then_with(|| cmp(&a.q_hi, &b.q_hi))
        });
        let mut groups: Vec<(T, Vec<(T, T, T)>)> = Vec::new();
        for c in comps {
            match groups.last_mut() {
                Some((p, items)) if *p == c.momentum => match items.last_mut() {
                    Some(last) if last.0 == c.q_lo && last.1 == c.q_hi => {
                        last.2 = last.2.clone() + c.weight.clone()
                    }
                    _ => items.push((c.q_lo.clone(), c.q_hi.clone(), c.weight.clone())),
                },
                _ => groups.push((
                    c.momentum.clone(),
                    vec![(c.q_lo.clone(), c.q_hi.clone(), c.weight.clone())],
                )),
            }
        }
        groups
    }

    /// Total variation distance `sup_A |μ(A) - ν(A)|` in `[0, 1]`, exact in
    /// the scalar type.
    pub fn tv_distance(&self, other: &Self) -> T {
        let ga = self.grouped();
        let gb = other.grouped();
        let mut l1 = KahanSum::new();
        let (mut i, mut j) = (0, 0);
        let empty: Vec<(T, T, T)> = Vec::new();
        while i < ga.len() || j < gb.len() {
            let ord = match (ga.get(i), gb.get(j)) {
                (Some(a), Some(b)) => cmp(&a.0, &b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            let (xa, xb) = match ord {
                Ordering::Less => {
                    i += 1;
                    (&ga[i - 1].1, &empty)
                }
                Ordering::Greater => {
                    j += 1;
                    (&empty, &gb[j - 1].1)
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (&ga[i - 1].1, &gb[j - 1].1)
                }
            };
            l1.add(l1_same_momentum(xa, xb));
        }
        l1.value() / T::from_i32(2).expect("2")
    }

    /// Total variation norm `‖μ - ν‖ = 2 · tv_distance`.
    pub fn total_variation_norm(&self, other: &Self) -> T {
        self.tv_distance(other) * T::from_i32(2).expect("2")
    }

    pub fn to_f64(&self) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    momentum: c.momentum.lossy_f64(),
                    q_lo: c.q_lo.lossy_f64(),
                    q_hi: c.q_hi.lossy_f64(),
                    weight: c.weight.lossy_f64(),
                })
                .collect(),
            total_time: self.total_time.as_ref().map(|t| t.lossy_f64()),
        }
    }

    pub fn distance_report(&self, other: &Self) -> MeasureDistanceReport {
        MeasureDistanceReport {
            tv: self.tv_distance(other).lossy_f64(),
            bl: bl_distance(&self.to_f64(), &other.to_f64()),
            bl_grid: BL_NODES,
        }
    }
}

/// Speed and `t ↦ q_t` on segment `k` of the path, which starts at `begin`.
fn segment_motion<'a, T: Scalar>(traj: &'a Trajectory<T>, k: usize, begin: &T) -> (T, Box<dyn Fn(&T) -> T + 'a>) {
    let begin = begin.clone();
    match (traj.start(), k) {
        (Start::Delayed { q0, p0 }, 0) => {
            let (q0, p0) = (q0.clone(), p0.clone());
            (
                p0.clone(),
                Box::new(move |t: &T| q0.clone() + p0.clone() * t.clone()),
            )
        }
        (start, k) => {
            let idx = if matches!(start, Start::Delayed { .. }) { k - 1 } else { k };
            let tau = traj.durations()[idx].clone();
            (
                T::one() / tau.clone(),
                Box::new(move |t: &T| (t.clone() - begin.clone()) / tau.clone()),
            )
        }
    }
}

/// `∫ |f_a - f_b|` for two sub-probability measures on `[0, 1)` given as
/// uniform pieces `(lo, hi, mass)` and point masses (`lo == hi`).
fn l1_same_momentum<T: Scalar>(a: &[(T, T, T)], b: &[(T, T, T)]) -> T {
    let mut total = KahanSum::new();
    // Point masses.
    let mut points: Vec<(T, T)> = Vec::new();
    for (sign, set) in [(T::one(), a), (-T::one(), b)] {
        for (lo, hi, w) in set {
            if lo == hi {
                points.push((lo.clone(), sign.clone() * w.clone()));
            }
        }
    }
    points.sort_by(|x, y| cmp(&x.0, &y.0));
    let mut k = 0;
    while k < points.len() {
        let mut acc = points[k].1.clone();
        let mut m = k + 1;
        while m < points.len() && points[m].0 == points[k].0 {
            acc = acc + points[m].1.clone();
            m += 1;
        }
        total.add(acc.abs());
        k = m;
    }
    // Piecewise-constant densities on the common refinement.
    let mut cuts: Vec<T> = Vec::new();
    for (lo, hi, _) in a.iter().chain(b) {
        if lo != hi {
            cuts.push(lo.clone());
            cuts.push(hi.clone());
        }
    }
    cuts.sort_by(cmp);
    cuts.dedup();
    for win in cuts.windows(2) {
        let (x0, x1) = (&win[0], &win[1]);
        let mut dens = T::zero();
        for (sign, set) in [(T::one(), a), (-T::one(), b)] {
            for (lo, hi, w) in set {
                if lo != hi && lo <= x0 && x1 <= hi {
                    dens = dens + sign.clone() * w.clone() / (hi.clone() - lo.clone());
                }
            }
        }
        total.add(dens.abs() * (x1.clone() - x0.clone()));
    }
    total.value()
}

/// `dq ⊗ π` for an atomic `π`.
pub fn product_target(pi: &ProbabilityLaw) -> Result<EmpiricalMeasure<f64>> {
    let atomic = pi.as_atomic().ok_or(Error::NonAtomicTarget)?;
    let comps = atomic
        .points()
        .map(|(p, lw)| Component {
            momentum: p,
            q_lo: 0.0,
            q_hi: 1.0,
            weight: lw.exp(),
        })
        .collect();
    EmpiricalMeasure::from_components(comps, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    #[test]
    fn constant_speed_single_component() {
        let tr = Trajectory::delayed(0.0, 1.0, vec![1.0, 1.0, 1.0]).unwrap();
        let m = EmpiricalMeasure::from_trajectory(&tr, &3.0).unwrap();
        let g = m.grouped();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].1, vec![(0.0, 1.0, 1.0)]);
    }

    #[test]
    fn cycle_and_a_half() {
        let tr = Trajectory::undelayed(vec![ratio(2, 1), ratio(2, 1)]).unwrap();
        let m = EmpiricalMeasure::from_trajectory(&tr, &ratio(3, 1)).unwrap();
        let half = ratio(1, 2);
        assert_eq!(
            m.components(),
            &[
                Component {
                    momentum: half.clone(),
                    q_lo: ratio(0, 1),
                    q_hi: ratio(1, 1),
                    weight: ratio(2, 3)
                },
                Component {
                    momentum: half.clone(),
                    q_lo: ratio(0, 1),
                    q_hi: half.clone(),
                    weight: ratio(1, 3)
                },
            ]
        );
        assert_eq!(m.mean_momentum(), half);
        assert!((m.to_f64().integrate(|_, p| p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_q_mean() {
        let tr = Trajectory::delayed(0.0, 1.0, vec![1.0]).unwrap();
        let m = EmpiricalMeasure::from_trajectory(&tr, &1.0).unwrap();
        assert!((m.integrate(|q, _| q) - 0.5).abs() < 1e-15);
        assert!((m.integrate(|_, _| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tv_basics() {
        let a = EmpiricalMeasure::from_components(
            vec![Component {
                momentum: ratio(1, 1),
                q_lo: ratio(0, 1),
                q_hi: ratio(1, 1),
                weight: ratio(1, 1),
            }],
            None,
        )
        .unwrap();
        let b = EmpiricalMeasure::from_components(
            vec![Component {
                momentum: ratio(2, 1),
                q_lo: ratio(0, 1),
                q_hi: ratio(1, 1),
                weight: ratio(1, 1),
            }],
            None,
        )
        .unwrap();
        assert_eq!(a.tv_distance(&a), BigRational::from_integer(0.into()));
        assert_eq!(a.tv_distance(&b), ratio(1, 1));
        let c = EmpiricalMeasure::from_components(
            vec![
                Component {
                    momentum: ratio(1, 1),
                    q_lo: ratio(0, 1),
                    q_hi: ratio(1, 2),
                    weight: ratio(1, 2),
                },
                Component {
                    momentum: ratio(1, 1),
                    q_lo: ratio(0, 1),
                    q_hi: ratio(0, 1),
                    weight: ratio(1, 2),
                },
            ],
            None,
        )
        .unwrap();
        // Density 1 on [0,1/2) vs 1 on [0,1): |diff| mass 1/2 on [1/2,1), point 1/2.
        assert_eq!(a.tv_distance(&c), ratio(1, 2));
    }

    #[test]
    fn merge_reproduces_concatenation() {
        let tr = Trajectory::delayed(ratio(1, 3), ratio(3, 2), vec![ratio(1, 2), ratio(5, 3), ratio(1, 1)]).unwrap();
        let (a, b, c) = (ratio(0, 1), ratio(6, 5), ratio(3, 1));
        let whole = EmpiricalMeasure::from_window(&tr, &a, &c).unwrap();
        let left = EmpiricalMeasure::from_window(&tr, &a, &b).unwrap();
        let right = EmpiricalMeasure::from_window(&tr, &b, &c).unwrap();
        let merged = left.merge(&right).unwrap();
        assert_eq!(merged.tv_distance(&whole), BigRational::from_integer(0.into()));
        assert_eq!(merged.mean_momentum(), whole.mean_momentum());
    }

    #[test]
    fn horizon_is_enforced() {
        let tr = Trajectory::undelayed(vec![1.0]).unwrap();
        assert!(matches!(
            EmpiricalMeasure::from_trajectory(&tr, &2.0),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn product_target_needs_atoms() {
        assert!(matches!(
            product_target(&ProbabilityLaw::polynomial(2.0).unwrap()),
            Err(Error::NonAtomicTarget)
        ));
        let t = product_target(&ProbabilityLaw::atomic(&[(1.0, 0.3), (2.0, 0.7)]).unwrap()).unwrap();
        assert_eq!(t.components().len(), 2);
    }
}
