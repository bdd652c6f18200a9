//! Dense parameter vectors.
//!
//! A [`ParamVector`] holds model parameters, gradients and perturbations
//! alike. Every fallible operation rejects non-finite results, so a vector
//! that came out of [`axpy`] or [`ParamVector::new`] contains only finite
//! entries.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Checked constructor: `values` must be non-empty and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("parameter vector must have dimension >= 1"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("ParamVector::new"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|v| c * v).collect())
    }

    /// `self - other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        axpy(-1.0, other, self)
    }

    /// `self + other`.
    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        axpy(1.0, other, self)
    }
}

impl From<Vec<f64>> for ParamVector {
    /// Unchecked conversion. Prefer [`ParamVector::new`] for untrusted input.
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a ParamVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn check_dims(x: &ParamVector, y: &ParamVector) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    Ok(())
}

/// Euclidean norm.
pub fn norm(v: &ParamVector) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite("norm"));
    }
    let sum = v.norm_squared();
    if sum.is_finite() && (sum > f64::MIN_POSITIVE || sum == 0.0 && v.iter().all(|x| *x == 0.0)) {
        return Ok(sum.sqrt());
    }
    // overflow or underflow of the plain sum of squares: rescale by the largest entry
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let scaled: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    Ok(scale * scaled.sqrt())
}

/// Returns `a * x + y`.
pub fn axpy(a: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    check_dims(x, y)?;
    let out: Vec<f64> = x.0.iter().zip(&y.0).map(|(xi, yi)| a * xi + yi).collect();
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("axpy"));
    }
    Ok(ParamVector(out))
}
