//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the estimators and simulators are generic over.
///
/// Implemented for `f32` and `f64`. Quadrature tolerances and embedding
/// checks scale with [`Real::tolerance_floor`], so single precision works
/// but with correspondingly looser accuracy.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default
    + Display
    + Debug
    + Serialize
    + DeserializeOwned
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in
    /// the implementing types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest absolute tolerance that is meaningful for this type.
    fn tolerance_floor() -> Self;
}

impl Real for f32 {
    fn tolerance_floor() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn tolerance_floor() -> Self {
        1e-13
    }
}

/// Round to nearest, ties to even.
pub(crate) fn round_ties_even<T: Real>(x: T) -> T {
    let r = x.round();
    let half = T::lit(0.5);
    if (x - x.trunc()).abs() == half {
        let two = T::lit(2.0);
        // `round` went away from zero; step back if that landed on an odd integer.
        if (r / two).fract() != T::zero() {
            return r - x.signum();
        }
    }
    r
}
