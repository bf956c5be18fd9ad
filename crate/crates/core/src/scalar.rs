//! Scalar abstractions shared by the analytic and exact parts of the crate.
//!
//! Real-valued quantities (L-values, Kloosterman sums, norms) are generic over
//! [`RealScalar`], exact densities over [`ExactScalar`]. Counting sums use the
//! fixed-point [`ExactSum`] so that regrouping the same summands never changes
//! the result.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Neg};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating point: f32 or f64.
pub trait RealScalar: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every real scalar")
    }

    fn of_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer converts to every real scalar")
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// A field in which densities and Euler-factor coefficients are computed.
///
/// `BigRational` is exact at any size; `Ratio<i64>` is exact until it
/// overflows; `f64` gives the same formulas in floating point.
pub trait ExactScalar: Clone + Num + Neg<Output = Self> + PartialOrd + Debug {
    fn from_int(v: i64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    /// `base^exp` for a nonnegative exponent.
    fn pow_u32(base: &Self, exp: u32) -> Self {
        let mut acc = Self::one();
        let mut b = base.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b.clone();
            }
            b = b.clone() * b;
            e >>= 1;
        }
        acc
    }
}

impl ExactScalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl ExactScalar for Ratio<i64> {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl ExactScalar for Ratio<i128> {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl ExactScalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: RealScalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: RealScalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: RealScalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Binary point of [`ExactSum`]: values are stored as integer multiples of
/// `2^-FIXED_FRACTION_BITS`.
pub const FIXED_FRACTION_BITS: i32 = 60;

/// Exact fixed-point accumulator.
///
/// Each summand is quantized once to a multiple of 2^-60; from then on
/// addition is exact integer addition, hence associative and independent of
/// grouping, worker count and summation order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactSum(i128);

impl ExactSum {
    pub const ZERO: ExactSum = ExactSum(0);

    /// Quantize a finite f64. Panics on non-finite input or if the value does
    /// not fit the fixed-point range (|v| < 2^67).
    pub fn quantize(v: f64) -> Self {
        assert!(v.is_finite(), "cannot quantize non-finite value {v}");
        let scaled = (v * 2f64.powi(FIXED_FRACTION_BITS)).round();
        assert!(
            scaled.abs() < 2f64.powi(126),
            "value {v} out of fixed-point range"
        );
        ExactSum(scaled as i128)
    }

    pub fn from_raw(raw: i128) -> Self {
        ExactSum(raw)
    }

    pub fn raw(&self) -> i128 {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0 as f64 / 2f64.powi(FIXED_FRACTION_BITS)
    }
}

impl Add for ExactSum {
    type Output = ExactSum;

    fn add(self, rhs: ExactSum) -> ExactSum {
        ExactSum(
            self.0
                .checked_add(rhs.0)
                .expect("fixed-point accumulator overflow"),
        )
    }
}

impl AddAssign for ExactSum {
    fn add_assign(&mut self, rhs: ExactSum) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ExactSum {
    fn sum<I: Iterator<Item = ExactSum>>(iter: I) -> Self {
        iter.fold(ExactSum::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        let naive: f64 = values.iter().sum();
        let acc: CompensatedSum<f64> = values.iter().copied().collect();
        assert_eq!(acc.value(), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn exact_pow() {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let p = <BigRational as ExactScalar>::pow_u32(&half, 10);
        assert_eq!(p, BigRational::new(BigInt::from(1), BigInt::from(1024)));
        assert_eq!(<f64 as ExactScalar>::pow_u32(&3.0, 4), 81.0);
    }

    proptest! {
        #[test]
        fn exact_sum_is_grouping_independent(
            values in proptest::collection::vec(0.0f64..1e5, 1..64),
            split in 0usize..64,
        ) {
            let split = split.min(values.len());
            let whole: ExactSum = values.iter().map(|&v| ExactSum::quantize(v)).sum();
            let left: ExactSum = values[..split].iter().map(|&v| ExactSum::quantize(v)).sum();
            let right: ExactSum = values[split..].iter().rev().map(|&v| ExactSum::quantize(v)).sum();
            prop_assert_eq!(whole, left + right);
            let naive: f64 = values.iter().sum();
            prop_assert!((whole.to_f64() - naive).abs() <= 1e-9 * naive.max(1.0));
        }
    }
}
