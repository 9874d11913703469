use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar used by the solvers and metrics.
pub trait Real: RealField + Copy + ToPrimitive + Debug + Display + LowerExp {}

impl<T> Real for T where T: RealField + Copy + ToPrimitive + Debug + Display + LowerExp {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(value: f64) -> T {
    nalgebra::convert(value)
}

/// Lossy conversion back to `f64` (reports and file output).
#[inline]
pub fn to_f64<T: Real>(value: T) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Machine epsilon of `T`.
#[inline]
pub fn epsilon<T: Real>() -> T {
    T::default_epsilon()
}
