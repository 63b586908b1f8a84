//! Scalar abstraction and the extended half-line `[0, +∞]`.
//!
//! Trajectories, empirical measures and the rate combinators are generic over
//! [`Scalar`], so the same code runs in `f64`, `f32` or exact rationals.
//! Everything that needs transcendental functions (entropy, tail exponents,
//! sampling) is `f64` only.

use std::cmp::Ordering;
use std::fmt::{self, Debug};
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use serde::{Serialize, Serializer};

/// Ordered field used for positions, times and weights.
pub trait Scalar:
    Clone + PartialOrd + Debug + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Keeps a position strictly below the wall. Exact types never need it;
    /// floating types can round `q0 + p0 t` up to `1` just before `T0`.
    fn clamp_below_one(self) -> Self {
        self
    }

    fn lossy_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar type")
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn clamp_below_one(self) -> Self {
        if self >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            self
        }
    }
}

impl Scalar for f32 {
    fn clamp_below_one(self) -> Self {
        if self >= 1.0 {
            1.0 - f32::EPSILON / 2.0
        } else {
            self
        }
    }
}

impl Scalar for BigRational {
    fn lossy_f64(&self) -> f64 {
        // Ratio<BigInt>::to_f64 can overflow on huge numerators/denominators
        // even when the quotient is moderate.
        self.to_f64().unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

impl Scalar for Rational64 {}

/// Builds an exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A value in `[0, +∞]`.
///
/// Multiplication follows the convention `0 · ∞ = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtendedReal<T = f64> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> ExtendedReal<T> {
    pub fn zero() -> Self {
        Self::Finite(T::zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_infinite()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Finite(x) if x.is_zero())
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Self::Finite(x) => Some(x),
            Self::Infinite => None,
        }
    }

    /// `1/x` on `[0, +∞]` with `1/0 = ∞` and `1/∞ = 0`.
    pub fn recip(&self) -> Self {
        match self {
            Self::Infinite => Self::zero(),
            Self::Finite(x) if x.is_zero() => Self::Infinite,
            Self::Finite(x) => Self::Finite(T::one() / x.clone()),
        }
    }

    /// `self - other` when the difference is a well defined element of
    /// `[0, +∞]`; `None` for `∞ - ∞`, `x - ∞` and negative results.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (Self::Infinite, Self::Finite(_)) => Some(Self::Infinite),
            (Self::Infinite, Self::Infinite) | (Self::Finite(_), Self::Infinite) => None,
            (Self::Finite(a), Self::Finite(b)) => {
                let d = a.clone() - b.clone();
                if d.is_negative() {
                    None
                } else {
                    Some(Self::Finite(d))
                }
            }
        }
    }

    pub fn scale(&self, k: &T) -> Self {
        self.clone() * Self::Finite(k.clone())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(x) => x.lossy_f64(),
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl ExtendedReal<f64> {
    /// Maps `f64::INFINITY` to [`ExtendedReal::Infinite`].
    pub fn from_f64(x: f64) -> Self {
        if x.is_infinite() && x > 0.0 {
            Self::Infinite
        } else {
            Self::Finite(x)
        }
    }
}

impl<T: Scalar> Add for ExtendedReal<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
            _ => Self::Infinite,
        }
    }
}

impl<T: Scalar> Mul for ExtendedReal<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a * b),
            (Self::Finite(a), Self::Infinite) | (Self::Infinite, Self::Finite(a)) => {
                if a.is_zero() {
                    Self::Finite(a)
                } else {
                    Self::Infinite
                }
            }
            (Self::Infinite, Self::Infinite) => Self::Infinite,
        }
    }
}

impl<T: Scalar> PartialOrd for ExtendedReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.partial_cmp(b),
            (Self::Finite(_), Self::Infinite) => Some(Ordering::Less),
            (Self::Infinite, Self::Finite(_)) => Some(Ordering::Greater),
            (Self::Infinite, Self::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl<T: Scalar> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{}", x.lossy_f64()),
            Self::Infinite => write!(f, "+inf"),
        }
    }
}

impl<T: Scalar> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => s.serialize_f64(x.lossy_f64()),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = ExtendedReal<f64>;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(E::zero() * E::Infinite, E::zero());
        assert_eq!(E::Infinite * E::zero(), E::zero());
        assert_eq!(E::Finite(2.0) * E::Infinite, E::Infinite);
    }

    #[test]
    fn recip_swaps_zero_and_infinity() {
        assert_eq!(E::zero().recip(), E::Infinite);
        assert_eq!(E::Infinite.recip(), E::zero());
        assert_eq!(E::Finite(4.0).recip(), E::Finite(0.25));
    }

    #[test]
    fn checked_sub_rejects_undefined_differences() {
        assert_eq!(E::Infinite.checked_sub(&E::Finite(1.0)), Some(E::Infinite));
        assert_eq!(E::Infinite.checked_sub(&E::Infinite), None);
        assert_eq!(E::Finite(1.0).checked_sub(&E::Infinite), None);
        assert_eq!(E::Finite(1.0).checked_sub(&E::Finite(2.0)), None);
    }

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(E::Finite(1e300) < E::Infinite);
        assert!(E::zero() < E::Finite(1e-300));
    }

    #[test]
    fn exact_arithmetic_in_rationals() {
        let a = ExtendedReal::Finite(ratio(1, 3));
        let b = ExtendedReal::Finite(ratio(1, 6));
        assert_eq!(a + b, ExtendedReal::Finite(ratio(1, 2)));
    }

    #[test]
    fn serializes_infinity_as_string() {
        assert_eq!(serde_json::to_string(&E::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&E::Finite(1.5)).unwrap(), "1.5");
    }
}
