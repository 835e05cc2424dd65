//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type the simulator and analysis are generic over.
///
/// Implemented for `f32` and `f64`. The special functions are tuned for
/// `f64`; with `f32` they are accurate to single precision only.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon used by iterative series cut-offs.
    fn series_eps() -> Self;
}

impl Real for f32 {
    fn series_eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn series_eps() -> Self {
        1e-16
    }
}
