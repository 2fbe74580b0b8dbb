//! Third-order hypermetrics and the bilinear fractional integral operators
//! they induce on discretized Ahlfors-regular quasi-metric measure spaces.
//!
//! The numerical core is generic over the floating-point type (see
//! [`Real`]); exponent algebra is generic over any ordered field (see
//! [`Field`]) so that it can run in exact rational arithmetic. The aliases
//! below fix the common instantiations.

pub mod error;
pub mod exponents;
pub mod hypermetric;
pub mod operators;
pub mod scalar;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub type Space = space::MetricMeasureSpace<f64>;
pub type Space32 = space::MetricMeasureSpace<f32>;
pub type GridFn = operators::GridFunction<f64>;
pub type ExactExponents = exponents::ExponentData<num_rational::Rational64>;
