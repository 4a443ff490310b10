//! Scalar abstractions.
//!
//! Metrics and weight fractions are exact ratios of counts, so they are
//! produced through [`Fraction`], which is implemented for `f32`, `f64` and
//! the rational types. Binning and summary statistics need real arithmetic
//! and are generic over [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used for binning and summary statistics.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {}

/// A scalar that can represent the ratio of two counts.
pub trait Fraction: Copy + PartialOrd + Debug {
    /// `num / den`; `den` must be non-zero.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(self) -> f64;
}

macro_rules! float_fraction {
    ($($t:ty),*) => {$(
        impl Fraction for $t {
            #[inline]
            fn from_ratio(num: u64, den: u64) -> Self {
                debug_assert!(den != 0);
                (num as f64 / den as f64) as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    )*};
}

float_fraction!(f32, f64);

macro_rules! ratio_fraction {
    ($($t:ty),*) => {$(
        impl Fraction for Ratio<$t> {
            fn from_ratio(num: u64, den: u64) -> Self {
                Ratio::new(num as $t, den as $t)
            }

            fn to_f64(self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    )*};
}

ratio_fraction!(u64, u128);

/// Population mean and standard deviation.
pub fn mean_std<T: Real>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = T::from_usize(values.len()).unwrap();
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    let var = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean))
        / n;
    (mean, var.sqrt())
}
