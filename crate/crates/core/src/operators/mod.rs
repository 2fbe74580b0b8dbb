//! Bilinear operators induced by the hypermetric, the linear Riesz potential,
//! the scalar integral `J(x)`, and weighted Lebesgue norms.

mod constants;
mod eval;
mod functions;
mod kernel;

pub use constants::{lemma11_constants, lemma11_constants_for, LambdaChoice, Lemma11Constants};
pub use eval::{
    bilinear_phi_apply, j_integral, riesz_apply, t_gamma_apply, t_gamma_apply_fast, t_gamma_apply_with,
    Exclusion,
};
pub use functions::FunctionSpec;
pub use kernel::{moment_quadrature, phi_moment, KernelProfile};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::MetricMeasureSpace;

/// Real samples on the points of a space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction<T> {
    values: Vec<T>,
    nonneg: bool,
}

impl<T: Real> GridFunction<T> {
    /// Nonnegative function; rejects negative or non-finite samples.
    pub fn nonneg(values: Vec<T>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::param("values", format!("expected finite nonnegative samples, found {v}")));
        }
        Ok(GridFunction { values, nonneg: true })
    }

    /// Signed function; only finiteness is required.
    pub fn signed(values: Vec<T>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("expected finite samples, found {v}")));
        }
        let nonneg = values.iter().all(|&v| v >= T::zero());
        Ok(GridFunction { values, nonneg })
    }

    pub fn constant(len: usize, c: T) -> Self {
        GridFunction { values: vec![c; len], nonneg: c >= T::zero() }
    }

    pub(crate) fn from_parts(values: Vec<T>, nonneg: bool) -> Self {
        GridFunction { values, nonneg }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn scaled(&self, c: T) -> Self {
        GridFunction {
            values: self.values.iter().map(|&v| v * c).collect(),
            nonneg: self.nonneg && c >= T::zero(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        GridFunction {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).collect(),
            nonneg: self.nonneg && other.nonneg,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    pub fn check_len(&self, space: &MetricMeasureSpace<T>) -> Result<()> {
        if self.values.len() == space.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: space.len(), got: self.values.len() })
        }
    }
}

/// `(sum_i |f_i|^p w_i)^(1/p)`, or `max_i |f_i|` for `p = inf`.
pub fn lp_norm<T: Real>(space: &MetricMeasureSpace<T>, f: &GridFunction<T>, p: T) -> Result<T> {
    f.check_len(space)?;
    if !(p >= T::one()) {
        return Err(Error::param("p", format!("must be at least 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.values().iter().fold(T::zero(), |m, &v| m.max(v.abs())));
    }
    let sum = f
        .values()
        .iter()
        .zip(space.weights())
        .fold(T::zero(), |acc, (&v, &w)| acc + v.abs().powf(p) * w);
    Ok(sum.powf(p.recip()))
}
