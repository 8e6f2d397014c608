use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Values a transition kernel can hold.
///
/// Kernel builders only ever form ratios of small integer counts, so any
/// field that can be built from `u64` works, exact or not.
pub trait Scalar: Clone + Num + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    fn from_f64_lossy(x: f64) -> Self;

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }
}

/// Floating-point scalars used by the analysis routines.
pub trait Real: Scalar + Float + FromPrimitive + Display + Sum + Copy {
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable count")
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn from_count(n: u64) -> Self {
                n as $t
            }
            #[inline]
            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }
            #[inline]
            fn from_f64_lossy(x: f64) -> Self {
                x as $t
            }
        }
        impl Real for $t {}
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Rational {
    fn from_count(n: u64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(|| Rational::from_integer(BigInt::from(0)))
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub(crate) fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ratio_is_exact() {
        let third = Rational::ratio(1, 3);
        let sum = third.clone() + third.clone() + third;
        assert_eq!(sum, Rational::from_count(1));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-16).abs() < 1e-30);
    }
}
