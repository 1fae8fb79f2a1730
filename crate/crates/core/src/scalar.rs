//! Scalar traits the matrix code is generic over.
//!
//! Two tiers: [`Field`] covers anything with exact `+ - * /` (floats,
//! `num_rational::Ratio`, `num_complex::Complex`), which is all the
//! structured constructors (duplication, commutation, Kronecker) need.
//! [`Real`] adds the floating-point machinery required for SVD-based rank
//! decisions and is implemented for `f32` and `f64`.

use std::fmt;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, Num, NumAssign};

/// Exact field arithmetic.
pub trait Field: Clone + PartialEq + fmt::Debug + Num + Neg<Output = Self> {}

impl<T> Field for T where T: Clone + PartialEq + fmt::Debug + Num + Neg<Output = T> {}

/// Floating-point real scalar: `f32` or `f64`.
pub trait Real:
    Field
    + Float
    + FromPrimitive
    + NumAssign
    + Copy
    + Default
    + Send
    + Sync
    + fmt::Display
    + fmt::LowerExp
    + serde::Serialize
    + for<'de> serde::Deserialize<'de>
    + 'static
{
    /// Converts an `f64` literal. Panics only for non-representable input,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalars with a modulus, used for pivoting in LU.
pub trait Modulus: Field + Copy {
    type Real: Real;
    fn modulus(&self) -> Self::Real;
    fn is_finite_value(&self) -> bool;
}

impl<T: Real> Modulus for T {
    type Real = T;
    fn modulus(&self) -> T {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> Modulus for Complex<T> {
    type Real = T;
    fn modulus(&self) -> T {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
