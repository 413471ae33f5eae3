//! Floating-point scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `0.5`
    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function `exp(x) / (1 + exp(x))`, evaluated without overflow.
#[inline]
pub fn inv_logit<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(inv_logit(x))`, accurate for large `|x|`.
#[inline]
pub fn ln_inv_logit<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `ln(p / (1 - p))`.
#[inline]
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

pub(crate) fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Median of a slice; NaN-free input assumed.
pub(crate) fn median<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::half()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_logit_is_stable_at_extremes() {
        assert_eq!(inv_logit(800.0_f64), 1.0);
        assert!(inv_logit(-800.0_f64) >= 0.0);
        assert!(inv_logit(-800.0_f64).is_finite());
        assert_eq!(inv_logit(0.0_f32), 0.5);
    }

    #[test]
    fn ln_inv_logit_matches_naive_in_safe_range() {
        for &x in &[-5.0_f64, -0.3, 0.0, 0.7, 4.0] {
            let naive = (1.0 / (1.0 + (-x).exp())).ln();
            assert!((ln_inv_logit(x) - naive).abs() < 1e-14);
        }
        assert!((ln_inv_logit(-1000.0_f64) + 1000.0).abs() < 1e-12);
    }

    #[test]
    fn logit_inverts_inv_logit() {
        for &x in &[-3.0_f64, -0.1, 0.0, 2.5] {
            assert!((logit(inv_logit(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median::<f64>(&[]), 0.0);
    }
}
