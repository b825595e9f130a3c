//! Scalar abstraction shared by the discretization, the Green solves and the
//! expression evaluator.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate: f32 or f64.
///
/// The sparse factorizations are delegated to `faer`, hence the extra
/// `RealField` bound next to the `num-traits` ones.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + faer::traits::RealField
    + Copy
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Lossy conversion from an f64 literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Measure of the unit ball in R^n.
pub fn unit_ball_measure(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_measure(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}
