//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count or index.
    #[inline]
    fn of_u64(k: u64) -> Self {
        Self::from_u64(k).expect("integer representable")
    }

    /// Converts a sample size.
    #[inline]
    fn of_usize(k: usize) -> Self {
        Self::from_usize(k).expect("integer representable")
    }

    /// Lossy view as `f64`, used for formatting and diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest `|ln σ|` accepted before a trajectory is declared explosive.
    fn log_guard() -> Self;
}

impl Real for f64 {
    fn log_guard() -> Self {
        700.0
    }
}

impl Real for f32 {
    fn log_guard() -> Self {
        // ln(f32::MAX) is about 88.7
        85.0
    }
}
