//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        // Every finite f64 converts (possibly rounding) into f32/f64.
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::lit(v)
}
