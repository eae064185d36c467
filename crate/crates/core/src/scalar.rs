//! Floating-point scalar abstraction shared by every numeric routine.
//!
//! Symbolic objects are exact trees; only evaluation, sampling and the dense
//! linear algebra are generic over the real field used underneath the
//! complex numbers.

use std::fmt::{Debug, Display};

use num_complex::Complex;

/// Real scalar usable for evaluation and dense linear algebra (f32 or f64).
pub trait Scalar:
    nalgebra::RealField
    + num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Copy
    + Default
    + Send
    + Sync
    + Debug
    + Display
    + 'static
{
    /// Lossy conversion from an f64 constant.
    fn of(x: f64) -> Self;

    /// Conversion to f64 for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Complex number over a [`Scalar`].
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cnorm<T: Scalar>(z: Cx<T>) -> T {
    num_traits::Float::hypot(z.re, z.im)
}
