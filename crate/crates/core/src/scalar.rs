//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Everything in this crate is written against this trait; the
/// concrete aliases at the crate root pick `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count or index into this scalar.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Ratio of this type's machine epsilon to that of `f64`; used to
    /// rescale the default tolerances, which are quoted for `f64`.
    #[inline]
    fn epsilon_ratio() -> f64 {
        Self::default_epsilon().as_f64() / f64::EPSILON
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `re + i·im`.
#[inline]
pub fn c<R: Real>(re: R, im: R) -> Complex<R> {
    Complex::new(re, im)
}

/// `e^{-iθ}` without going through the float-only complex exponential.
#[inline]
pub fn phase_neg<R: Real>(theta: R) -> Complex<R> {
    Complex::new(theta.cos(), -theta.sin())
}

/// Modulus of a complex number.
#[inline]
pub fn modulus<R: Real>(z: Complex<R>) -> R {
    z.re.hypot(z.im)
}
