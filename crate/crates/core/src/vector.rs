//! Finite-dimensional real coordinate vectors.
//!
//! Points of `X = R^d` and dual vectors of `X*` share this representation;
//! the bilinear pairing is the ordinary dot product.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A vector with at least one coordinate, all of them finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Vector(coords))
    }

    /// Builds a vector from coordinates already known to be valid.
    ///
    /// Panics if the slice is empty or contains a non-finite value.
    pub fn from_slice(coords: &[f64]) -> Self {
        Vector::new(coords.to_vec()).expect("invalid vector literal")
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector must have dimension >= 1");
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * factor).collect())
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

pub(crate) fn euclid(a: &[f64]) -> f64 {
    let m = max_abs(a);
    if m == 0.0 {
        return 0.0;
    }
    m * a.iter().map(|c| (c / m) * (c / m)).sum::<f64>().sqrt()
}

pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
