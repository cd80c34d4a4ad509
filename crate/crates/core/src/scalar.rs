//! Scalar abstraction shared by the image-domain math.
//!
//! Planes, pyramids and local statistics are generic over [`Real`] so the
//! pipeline can run in `f32` for throughput or `f64` for oracle-grade
//! comparisons. Pooled feature values and everything downstream of them
//! (regression, evaluation) are plain `f64`.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating point sample type usable throughout the transform and features.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant representable")
    }

    /// Widening conversion used by accumulators.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
