//! Flat 64-bit parameter/gradient vectors.
//!
//! All arithmetic is fixed-order (index ascending) so simulated runs are
//! bit-reproducible; mismatched lengths and non-finite results are errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let v = Self(values);
        v.ensure_finite("ParamVector::new")?;
        Ok(v)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.0.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { context })
        }
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_len(other)?;
        let sq: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sq.sqrt())
    }

    /// In-place `self += a * x`.
    pub fn axpy_in_place(&mut self, a: f64, x: &Self) -> Result<()> {
        self.check_len(x)?;
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
        self.ensure_finite("axpy")
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for v in &mut self.0 {
            *v *= a;
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

/// Returns `a*x + y` elementwise, left-to-right index order.
pub fn vec_axpy(a: f64, x: &ParamVector, y: &ParamVector) -> Result<ParamVector> {
    let mut out = y.clone();
    out.axpy_in_place(a, x)?;
    Ok(out)
}

/// Fixed-order (index ascending within a vector, rank ascending across
/// vectors) mean of a set of equal-length vectors.
pub fn sequential_mean(vectors: &[&ParamVector]) -> Result<ParamVector> {
    let first = vectors.first().ok_or(Error::EmptyGroup)?;
    let mut acc = (*first).clone();
    for v in &vectors[1..] {
        acc.check_len(v)?;
        for (a, b) in acc.0.iter_mut().zip(&v.0) {
            *a += b;
        }
    }
    acc.scale_in_place(1.0 / vectors.len() as f64);
    acc.ensure_finite("sequential_mean")?;
    Ok(acc)
}
