//! Scalar abstractions.
//!
//! Geometry and operators are written against [`Real`] (any `f32`/`f64`-like
//! float). Exponent algebra only needs ordered field arithmetic and is written
//! against [`Field`], which is also implemented by exact rationals.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Floating-point scalar used by spaces, hypermetrics and operators.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Send
    + Sync
    + Debug
    + Display
    + Default
    + 'static
{
    /// Converts an `f64` literal. Every supported float can represent a
    /// (possibly rounded) `f64`, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite or infinite float converts")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Send
        + Sync
        + Debug
        + Display
        + Default
        + 'static
{
}

/// Ordered field arithmetic, enough for the exponent identities.
pub trait Field: Clone + PartialOrd + Num + Signed + Debug + Display {
    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl<T> Field for T where T: Clone + PartialOrd + Num + Signed + Debug + Display {}
