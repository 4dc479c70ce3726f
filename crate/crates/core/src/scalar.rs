//! Scalar abstraction shared by every solver.
//!
//! All math is written against [`Real`], which is satisfied by `f32` and `f64`.
//! Conversions go through `num-traits` so literal constants can be written as
//! `f64` and narrowed once.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the calibration solvers.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default
{
    /// Converts an `f64` literal. Total for the supported float types.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    #[inline]
    fn deg(v: f64) -> Self {
        Self::lit(v.to_radians())
    }
}

impl Real for f32 {}
impl Real for f64 {}
