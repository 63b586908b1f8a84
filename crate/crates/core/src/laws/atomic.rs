use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Where the atoms of a truncated infinite sequence accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Accumulation {
    /// Genuinely finite law.
    None,
    /// Truncation of a sequence of atoms decreasing to `0`.
    AtZero,
    /// Truncation of a sequence of atoms increasing to `∞`.
    AtInfinity,
}

impl Accumulation {
    fn flipped(self) -> Self {
        match self {
            Self::None => Self::None,
            Self::AtZero => Self::AtInfinity,
            Self::AtInfinity => Self::AtZero,
        }
    }
}

/// Finitely many positive atoms with log-weights.
///
/// Atoms are stored as base values together with an `inverted` flag so that
/// `x ↦ 1/x` is an exact involution.
#[derive(Clone, Debug)]
pub struct AtomicLaw {
    base: Vec<f64>,
    log_w: Vec<f64>,
    inverted: bool,
    accumulation: Accumulation,
    cumulative: Vec<f64>,
}

impl AtomicLaw {
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidLaw("no atoms".into()));
        }
        let mut total = 0.0;
        for &(a, w) in pairs {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidLaw(format!("atom {a} is not in (0, ∞)")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidLaw(format!("weight {w} is not a probability")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, expected 1")));
        }
        let atoms = pairs.iter().map(|p| p.0).collect();
        let logw = pairs.iter().map(|p| p.1.ln()).collect();
        Self::from_log_weights(atoms, logw, Accumulation::None)
    }

    /// Builds the law from unnormalised log-weights. Duplicate atoms merge.
    pub fn from_log_weights(atoms: Vec<f64>, logw: Vec<f64>, accumulation: Accumulation) -> Result<Self> {
        if atoms.len() != logw.len() || atoms.is_empty() {
            return Err(Error::InvalidLaw("atoms and weights differ in length".into()));
        }
        if atoms.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidLaw("atoms must lie in (0, ∞)".into()));
        }
        let mut pairs: Vec<(f64, f64)> = atoms
            .into_iter()
            .zip(logw)
            .filter(|(_, lw)| *lw > f64::NEG_INFINITY)
            .collect();
        if pairs.is_empty() {
            return Err(Error::InvalidLaw("all weights vanish".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, lw) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 = log_sum_exp([last.1, lw]),
                _ => merged.push((a, lw)),
            }
        }
        let norm = log_sum_exp(merged.iter().map(|p| p.1));
        if !norm.is_finite() {
            return Err(Error::InvalidLaw("weights do not normalise".into()));
        }
        let base: Vec<f64> = merged.iter().map(|p| p.0).collect();
        let log_w: Vec<f64> = merged.iter().map(|p| p.1 - norm).collect();
        Ok(Self::assemble(base, log_w, false, accumulation))
    }

    fn assemble(base: Vec<f64>, log_w: Vec<f64>, inverted: bool, accumulation: Accumulation) -> Self {
        let mut law = Self {
            base,
            log_w,
            inverted,
            accumulation,
            cumulative: Vec::new(),
        };
        let mut acc = 0.0;
        law.cumulative = law
            .points()
            .map(|(_, lw)| {
                acc += lw.exp();
                acc
            })
            .collect();
        law
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn accumulation(&self) -> Accumulation {
        self.accumulation
    }

    pub fn is_truncated(&self) -> bool {
        self.accumulation != Accumulation::None
    }

    /// `(atom, log weight)` in increasing order of the atom.
    pub fn points(&self) -> Box<dyn Iterator<Item = (f64, f64)> + '_> {
        if self.inverted {
            Box::new(
                self.base
                    .iter()
                    .zip(&self.log_w)
                    .rev()
                    .map(|(b, lw)| (1.0 / b, *lw)),
            )
        } else {
            Box::new(self.base.iter().copied().zip(self.log_w.iter().copied()))
        }
    }

    pub fn atoms(&self) -> Vec<f64> {
        self.points().map(|p| p.0).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points().map(|p| p.1.exp()).collect()
    }

    pub fn smallest_atom(&self) -> f64 {
        self.points().next().expect("non-empty").0
    }

    /// The law of `1/X`.
    pub fn reciprocal(&self) -> Self {
        Self::assemble(
            self.base.clone(),
            self.log_w.clone(),
            !self.inverted,
            self.accumulation.flipped(),
        )
    }

    /// Same atoms, new unnormalised log-weights given per atom in increasing
    /// atom order.
    pub fn reweighted(&self, log_factor: impl Fn(f64) -> f64) -> Result<Self> {
        let pts: Vec<(f64, f64)> = self.points().collect();
        let mut new_lw: Vec<f64> = pts.iter().map(|(a, lw)| lw + log_factor(*a)).collect();
        if new_lw.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::DivergentNormalizer);
        }
        let norm = log_sum_exp(new_lw.iter().copied());
        if !norm.is_finite() {
            return Err(Error::DivergentNormalizer);
        }
        for x in &mut new_lw {
            *x -= norm;
        }
        // Keep the internal storage order.
        if self.inverted {
            new_lw.reverse();
        }
        Ok(Self::assemble(self.base.clone(), new_lw, self.inverted, self.accumulation))
    }

    pub fn log_weight_at(&self, x: f64) -> f64 {
        let b = if self.inverted { 1.0 / x } else { x };
        // Exact match on the stored base value first.
        if let Ok(i) = self.base.binary_search_by(|v| v.total_cmp(&b)) {
            return self.log_w[i];
        }
        self.points()
            .find(|(a, _)| *a == x)
            .map_or(f64::NEG_INFINITY, |(_, lw)| lw)
    }

    pub fn log_mass_in(&self, lo: f64, hi: f64) -> f64 {
        log_sum_exp(self.points().filter(|(a, _)| *a >= lo && *a < hi).map(|p| p.1))
    }

    pub fn log_cdf_closed(&self, y: f64) -> f64 {
        log_sum_exp(self.points().filter(|(a, _)| *a <= y).map(|p| p.1))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|c| *c <= u).min(self.len() - 1);
        self.points().nth(i).expect("index in range").0
    }

    pub fn sample_conditioned<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
        let inside: Vec<(f64, f64)> = self.points().filter(|(a, _)| *a >= lo && *a < hi).collect();
        if inside.is_empty() {
            return Err(Error::EmptyWindow { lo, hi });
        }
        let norm = log_sum_exp(inside.iter().map(|p| p.1));
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, lw) in &inside {
            acc += (lw - norm).exp();
            if u < acc {
                return Ok(*a);
            }
        }
        Ok(inside.last().expect("non-empty").0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reciprocal_is_exact_involution() {
        let law = AtomicLaw::new(&[(0.3, 0.25), (0.7, 0.5), (3.0, 0.25)]).unwrap();
        let back = law.reciprocal().reciprocal();
        assert_eq!(law.atoms(), back.atoms());
        assert_eq!(law.weights(), back.weights());
        let r = law.reciprocal();
        assert_eq!(r.atoms()[0], 1.0 / 3.0);
        assert_eq!(r.accumulation(), Accumulation::None);
    }

    #[test]
    fn duplicates_merge() {
        let law = AtomicLaw::new(&[(1.0, 0.25), (1.0, 0.25), (2.0, 0.5)]).unwrap();
        assert_eq!(law.len(), 2);
        assert!((law.weights()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empirical_frequencies_match_weights() {
        let law = AtomicLaw::new(&[(1.0, 0.2), (2.0, 0.3), (4.0, 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let x = law.sample(&mut rng);
            counts[[1.0, 2.0, 4.0].iter().position(|a| *a == x).unwrap()] += 1;
        }
        for (c, w) in counts.iter().zip([0.2, 0.3, 0.5]) {
            let f = *c as f64 / n as f64;
            assert!((f - w).abs() < 4.0 * (w * (1.0 - w) / n as f64).sqrt());
        }
    }

    #[test]
    fn half_open_windows() {
        let law = AtomicLaw::new(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert!((law.log_mass_in(1.0, 2.0).exp() - 0.5).abs() < 1e-15);
        assert_eq!(law.log_mass_in(1.5, 2.0), f64::NEG_INFINITY);
        assert!((law.log_cdf_closed(2.0)).abs() < 1e-15);
    }
}
