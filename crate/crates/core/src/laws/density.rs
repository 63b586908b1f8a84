use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::numerics::{integrate_finite, log_diff_exp};

pub type LogFactor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    ExpSpeed { xi0: f64 },
    Polynomial { kappa: f64 },
    Reciprocal(Box<DensityLaw>),
    Reweighted {
        base: Box<DensityLaw>,
        log_factor: LogFactor,
        log_norm: f64,
        table: Arc<OnceLock<InverseTable>>,
    },
}

/// Absolutely continuous law on an interval of `(0, ∞)`.
#[derive(Clone)]
pub struct DensityLaw {
    kind: Kind,
    lo: f64,
    hi: f64,
}

impl fmt::Debug for DensityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::ExpSpeed { xi0 } => write!(f, "ExpSpeed({xi0})"),
            Kind::Polynomial { kappa } => write!(f, "Polynomial({kappa})"),
            Kind::Reciprocal(b) => write!(f, "Reciprocal({b:?})"),
            Kind::Reweighted { base, log_norm, .. } => {
                write!(f, "Reweighted({base:?}, log_norm={log_norm}, [{}, {}])", self.lo, self.hi)
            }
        }
    }
}

impl DensityLaw {
    pub fn exp_interarrival(xi0: f64) -> Result<Self> {
        if !(xi0 > 0.0) || !xi0.is_finite() {
            return Err(Error::InvalidLaw(format!("rate {xi0} must be positive")));
        }
        Ok(Self {
            kind: Kind::ExpSpeed { xi0 },
            lo: 0.0,
            hi: f64::INFINITY,
        })
    }

    pub fn polynomial(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidLaw(format!("exponent {kappa} must be positive")));
        }
        Ok(Self {
            kind: Kind::Polynomial { kappa },
            lo: 0.0,
            hi: 1.0,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn reciprocal(&self) -> Self {
        if let Kind::Reciprocal(b) = &self.kind {
            return (**b).clone();
        }
        let lo = if self.hi.is_infinite() { 0.0 } else { 1.0 / self.hi };
        let hi = if self.lo == 0.0 { f64::INFINITY } else { 1.0 / self.lo };
        Self {
            kind: Kind::Reciprocal(Box::new(self.clone())),
            lo,
            hi,
        }
    }

    /// `Z⁻¹ e^{g(x)} law(dx)` restricted to `[lo, hi]`, with `log Z` given.
    pub fn reweighted(&self, log_factor: LogFactor, log_norm: f64, lo: f64, hi: f64) -> Self {
        Self {
            kind: Kind::Reweighted {
                base: Box::new(self.clone()),
                log_factor,
                log_norm,
                table: Arc::new(OnceLock::new()),
            },
            lo: lo.max(self.lo),
            hi: hi.min(self.hi),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(x > self.lo) || x > self.hi || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::ExpSpeed { xi0 } => xi0.ln() - xi0 / x - 2.0 * x.ln(),
            Kind::Polynomial { kappa } => kappa.ln() + (kappa - 1.0) * x.ln(),
            Kind::Reciprocal(b) => b.log_pdf(1.0 / x) - 2.0 * x.ln(),
            Kind::Reweighted {
                base,
                log_factor,
                log_norm,
                ..
            } => {
                let lp = base.log_pdf(x);
                if lp == f64::NEG_INFINITY {
                    lp
                } else {
                    lp + log_factor(x) - log_norm
                }
            }
        }
    }

    /// `log P(X ≤ x)`.
    pub fn log_cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return f64::NEG_INFINITY;
        }
        if x >= self.hi {
            return 0.0;
        }
        match &self.kind {
            Kind::ExpSpeed { xi0 } => -xi0 / x,
            Kind::Polynomial { kappa } => kappa * x.ln(),
            Kind::Reciprocal(b) => b.log_ccdf(1.0 / x),
            Kind::Reweighted { .. } => self.numeric_log_mass(self.lo, x),
        }
    }

    /// `log P(X > x)`.
    pub fn log_ccdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::ExpSpeed { xi0 } => (-(-xi0 / x).exp()).ln_1p(),
            Kind::Polynomial { kappa } => (-(x.powf(*kappa))).ln_1p(),
            Kind::Reciprocal(b) => b.log_cdf(1.0 / x),
            Kind::Reweighted { .. } => self.numeric_log_mass(x, self.hi),
        }
    }

    pub fn log_mass_in(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        if !(hi > lo) {
            return f64::NEG_INFINITY;
        }
        if let Kind::Reweighted { .. } = self.kind {
            return self.numeric_log_mass(lo, hi);
        }
        let a = self.log_cdf(lo);
        if a < -std::f64::consts::LN_2 {
            log_diff_exp(self.log_cdf(hi), a)
        } else {
            log_diff_exp(self.log_ccdf(lo), self.log_ccdf(hi))
        }
    }

    fn numeric_log_mass(&self, lo: f64, hi: f64) -> f64 {
        log_integral_exp(&|x| self.log_pdf(x), lo, hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::ExpSpeed { xi0 } => {
                let tau: f64 = Exp::new(*xi0).expect("positive rate").sample(rng);
                1.0 / tau
            }
            Kind::Polynomial { kappa } => (1.0 - rng.gen::<f64>()).powf(1.0 / kappa),
            Kind::Reciprocal(b) => 1.0 / b.sample(rng),
            Kind::Reweighted { table, .. } => {
                table.get_or_init(|| InverseTable::build(self)).sample(rng.gen())
            }
        }
    }

    pub fn sample_conditioned<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        if self.log_mass_in(lo, hi) == f64::NEG_INFINITY {
            return Err(Error::EmptyWindow { lo, hi });
        }
        let u: f64 = rng.gen();
        match &self.kind {
            Kind::ExpSpeed { xi0 } => {
                let (fl, fh) = (self.log_cdf(lo), self.log_cdf(hi));
                let lf = fh + (-u * -(fl - fh).exp_m1()).ln_1p();
                Ok((-xi0 / lf).clamp(lo, hi))
            }
            Kind::Polynomial { kappa } => {
                let (fl, fh) = (self.log_cdf(lo), self.log_cdf(hi));
                let lf = fh + (-u * -(fl - fh).exp_m1()).ln_1p();
                Ok((lf / kappa).exp().clamp(lo, hi))
            }
            Kind::Reciprocal(b) => {
                let blo = if hi.is_infinite() { 0.0 } else { 1.0 / hi };
                let bhi = if lo == 0.0 { f64::INFINITY } else { 1.0 / lo };
                Ok(1.0 / b.sample_conditioned(blo, bhi, rng)?)
            }
            Kind::Reweighted { table, .. } => {
                let t = table.get_or_init(|| InverseTable::build(self));
                let (cl, ch) = (t.cdf(lo), t.cdf(hi));
                Ok(t.sample(cl + u * (ch - cl)).clamp(lo, hi))
            }
        }
    }
}

/// `log ∫_lo^hi e^{g(x)} dx` with a shift by the maximum of `g` on a
/// logarithmic grid.
pub(crate) fn log_integral_exp(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let a = if lo > 0.0 { lo } else { hi.min(1.0) * 1e-20 };
    let b = if hi.is_finite() { hi } else { lo.max(1.0) * 1e20 };
    if !(b > a) {
        return f64::NEG_INFINITY;
    }
    // Integrate in y = log x: ∫ e^{g(x)} dx = ∫ e^{g(e^y) + y} dy.
    let h = |y: f64| g(y.exp()) + y;
    let (ya, yb) = (a.ln(), b.ln());
    let n = 4000;
    let ys: Vec<f64> = (0..=n).map(|k| ya + (yb - ya) * k as f64 / n as f64).collect();
    let hs: Vec<f64> = ys.iter().map(|&y| h(y)).collect();
    let m = hs.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let first = hs.iter().position(|v| *v > m - 60.0).unwrap_or(0);
    let last = hs.iter().rposition(|v| *v > m - 60.0).unwrap_or(n);
    let l = ys[first.saturating_sub(1)];
    let r = ys[(last + 1).min(n)];
    let pieces = 16;
    let mut total = 0.0;
    for k in 0..pieces {
        let pl = l + (r - l) * k as f64 / pieces as f64;
        let pr = l + (r - l) * (k + 1) as f64 / pieces as f64;
        total += integrate_finite(|y| (h(y) - m).exp(), pl, pr, 1e-14).value;
    }
    if total > 0.0 {
        total.ln() + m
    } else {
        f64::NEG_INFINITY
    }
}

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..=n)
        .map(|k| (la + (lb - la) * k as f64 / n as f64).exp())
        .collect()
}

/// Tabulated inverse CDF on a logarithmic grid, linear between nodes.
#[derive(Debug)]
struct InverseTable {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl InverseTable {
    fn build(law: &DensityLaw) -> Self {
        let a = if law.lo > 0.0 { law.lo } else { 1e-12 * law.hi.min(1.0) };
        let b = if law.hi.is_finite() { law.hi } else { 1e12 * law.lo.max(1.0) };
        let xs = log_grid(a, b, 8000);
        let mut cum = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            let (x0, x1) = (xs[i - 1], xs[i]);
            let d0 = law.log_pdf(x0).exp();
            let d1 = law.log_pdf(x1).exp();
            let dm = law.log_pdf(0.5 * (x0 + x1)).exp();
            cum[i] = cum[i - 1] + (x1 - x0) * (d0 + 4.0 * dm + d1) / 6.0;
        }
        let total = *cum.last().expect("grid");
        for c in &mut cum {
            *c /= total;
        }
        Self { xs, cum }
    }

    fn cdf(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|v| *v <= x);
        if i == 0 {
            return 0.0;
        }
        if i >= self.xs.len() {
            return 1.0;
        }
        let t = (x - self.xs[i - 1]) / (self.xs[i] - self.xs[i - 1]);
        self.cum[i - 1] + t * (self.cum[i] - self.cum[i - 1])
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cum.partition_point(|c| *c <= u);
        if i == 0 {
            return self.xs[0];
        }
        if i >= self.cum.len() {
            return *self.xs.last().expect("grid");
        }
        let span = self.cum[i] - self.cum[i - 1];
        let t = if span > 0.0 { (u - self.cum[i - 1]) / span } else { 0.0 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exp_speed_cdf_and_tail() {
        let d = DensityLaw::exp_interarrival(2.0).unwrap();
        assert!((d.log_cdf(1.0) + 2.0).abs() < 1e-15);
        let lm = d.log_mass_in(0.5, 1.0);
        assert!((lm.exp() - ((-2.0f64).exp() - (-4.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn interarrival_is_exponential() {
        let d = DensityLaw::exp_interarrival(2.0).unwrap().reciprocal();
        // P(τ ≤ 1) = 1 - e^{-2}.
        assert!((d.log_cdf(1.0).exp() - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
        let back = d.reciprocal();
        assert!(matches!(back.kind, Kind::ExpSpeed { xi0 } if xi0 == 2.0));
    }

    #[test]
    fn conditioned_samples_stay_in_tiny_windows() {
        let d = DensityLaw::exp_interarrival(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lo, hi) = (1e-4 * 0.9, 1e-4 * 1.1);
        for _ in 0..1000 {
            let x = d.sample_conditioned(lo, hi, &mut rng).unwrap();
            assert!(x >= lo && x <= hi);
        }
    }

    #[test]
    fn reweighted_normalisation_and_sampling() {
        // Size bias of the polynomial law κ=2: density 3p² on (0, 1].
        let d = DensityLaw::polynomial(2.0).unwrap();
        let mean: f64 = 2.0 / 3.0;
        let rw = d.reweighted(Arc::new(|x: f64| x.ln()), mean.ln(), 0.0, 1.0);
        assert!(rw.log_cdf(1.0).abs() < 1e-12);
        assert!((rw.log_cdf(0.5).exp() - 0.125).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50_000;
        let m: f64 = (0..n).map(|_| rw.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 0.75).abs() < 0.01);
    }

    #[test]
    fn log_integral_of_gaussian_like_bump() {
        let v = log_integral_exp(&|x: f64| -(x - 3.0).powi(2) * 50.0, 0.0, f64::INFINITY);
        let exact = (std::f64::consts::PI / 50.0).sqrt().ln();
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
    }
}
