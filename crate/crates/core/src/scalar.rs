//! Scalar abstractions.
//!
//! Path statistics are generic over [`Real`] so the same code runs on `f32`
//! and `f64` samples. The ρ triangular system only needs field arithmetic on
//! small integers, so it is generic over [`Field`] and can be solved exactly
//! in rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar accepted by the path statistics.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

/// Exact or inexact field arithmetic over values built from integers.
pub trait Field: Num + Clone + Debug {
    fn from_int(x: i64) -> Self;
}

impl Field for f64 {
    fn from_int(x: i64) -> Self {
        x as f64
    }
}

impl Field for f32 {
    fn from_int(x: i64) -> Self {
        x as f32
    }
}

macro_rules! rational_field {
    ($($int:ty),*) => {$(
        impl Field for num_rational::Ratio<$int> {
            fn from_int(x: i64) -> Self {
                num_rational::Ratio::from_integer(x as $int)
            }
        }
    )*};
}

rational_field!(i64, i128);
