//! Small numerical kernels shared by the modules: log-space sums,
//! compensated summation and quadrature wrappers.

use crate::scalar::Scalar;

/// `log Σ exp(x_i)`; `-∞` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(e^a - e^b)` for `a >= b`; `-∞` when `a == b`.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// Kahan–Babuška compensated running sum. For exact scalar types the
/// compensation term stays identically zero.
#[derive(Clone, Debug)]
pub struct KahanSum<T: Scalar> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Default for KahanSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum.clone() + x.clone();
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp.clone() + ((self.sum.clone() - t.clone()) + x);
        } else {
            self.comp = self.comp.clone() + ((x - t.clone()) + self.sum.clone());
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone() + self.comp.clone()
    }
}

/// Eight-point Gauss–Legendre rule on `[-1, 1]`: (node, weight).
pub const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Gauss–Legendre on `[a, b]`; exact for polynomials of degree ≤ 15.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS_LEGENDRE_8
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Result of a numerical integration.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Tanh-sinh quadrature on a finite interval. Non-finite integrand values
/// (underflowed densities times infinite logs) are read as zero.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if b <= a {
        return Quadrature {
            value: 0.0,
            error: 0.0,
        };
    }
    let out = quadrature::double_exponential::integrate(
        |x| {
            let y = f(x);
            if y.is_nan() {
                0.0
            } else {
                y
            }
        },
        a,
        b,
        tol,
    );
    Quadrature {
        value: out.integral,
        error: out.error_estimate,
    }
}

/// Integral over `[lo, hi]` with `0 <= lo < hi <= ∞`. An infinite upper end
/// is folded onto `(0, 1/m]` through `p = 1/s`.
pub fn integrate_support<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Quadrature {
    if hi.is_finite() {
        return integrate_finite(&f, lo, hi, tol);
    }
    let m = lo.max(1.0);
    let head = integrate_finite(&f, lo, m, tol / 2.0);
    let tail = integrate_finite(
        |s| {
            if s <= 0.0 {
                0.0
            } else {
                f(1.0 / s) / (s * s)
            }
        },
        0.0,
        1.0 / m,
        tol / 2.0,
    );
    Quadrature {
        value: head.value + tail.value,
        error: head.error + tail.error,
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut k = KahanSum::<f64>::new();
    for x in xs {
        k.add(*x);
    }
    let m = k.value() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Two-sided Student-t quantile used for slope confidence intervals.
pub fn student_t_quantile(prob: f64, dof: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if dof <= 0.0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(prob))
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        let v = log_sum_exp([-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_diff_exp_matches_direct() {
        let v = log_diff_exp(0.0, -1.0);
        assert!((v - (1.0 - (-1f64).exp()).ln()).abs() < 1e-14);
        assert_eq!(log_diff_exp(-3.0, -3.0), f64::NEG_INFINITY);
    }

    #[test]
    fn kahan_beats_naive_summation() {
        let mut k = KahanSum::<f64>::new();
        let mut naive = 0.0f64;
        for _ in 0..1_000_000 {
            k.add(0.1);
            naive += 0.1;
        }
        assert!((k.value() - 100_000.0).abs() < 1e-9);
        assert!((naive - 100_000.0).abs() > (k.value() - 100_000.0).abs());
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let v = gauss_legendre(|x| x.powi(15) + 3.0 * x.powi(4), 0.0, 2.0);
        let exact = 2f64.powi(16) / 16.0 + 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn half_line_integral_of_exponential_interarrival_density() {
        // ξ e^{-ξ/p} / p² integrates to one on (0, ∞).
        let xi = 2.0;
        let q = integrate_support(|p: f64| xi * (-xi / p).exp() / (p * p), 0.0, f64::INFINITY, 1e-12);
        assert!((q.value - 1.0).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn t_quantile_is_sane() {
        let q = student_t_quantile(0.975, 1e6);
        assert!((q - 1.959964).abs() < 1e-3);
    }
}
