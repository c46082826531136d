//! Dense `f64` vectors and the Euclidean ball projection.
//!
//! Everything downstream (direction estimates, iterates, exact solutions)
//! is a flat dense vector, so this stays deliberately small: allocation,
//! elementwise arithmetic, dot/norm, and `project_ball`. Operators are
//! implemented on references to keep solver loops free of hidden clones.

use std::ops::{Add, Mul, Sub};

use crate::error::{BilevelError, Result};

/// Dense vector of `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector {
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector { data }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(len: usize, i: usize) -> Self {
        assert!(i < len, "basis index {i} out of range for length {len}");
        let mut v = Self::zeros(len);
        v.data[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &Vector) {
        assert_eq!(self.len(), other.len(), "axpy: length mismatch");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for s in &mut self.data {
            *s *= a;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Errors with the given context if any entry is NaN or infinite.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(BilevelError::NonFinite {
                context: context.to_string(),
            })
        }
    }
}

impl From<Vec<f64>> for Vector {
    fn from(data: Vec<f64>) -> Self {
        Vector { data }
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.len(), rhs.len(), "add: length mismatch");
        Vector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.len(), rhs.len(), "sub: length mismatch");
        Vector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|a| a * rhs).collect(),
        }
    }
}

/// Radius of the Euclidean ball the auxiliary variable is confined to.
///
/// Finite and strictly positive by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallRadius(f64);

impl BallRadius {
    pub fn new(radius: f64) -> Result<Self> {
        if radius.is_finite() && radius > 0.0 {
            Ok(BallRadius(radius))
        } else {
            Err(BilevelError::InvalidParameter {
                name: "radius",
                reason: format!("must be finite and positive, got {radius}"),
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Projects `v` onto the ball of radius `m`.
///
/// Vectors already inside the ball are returned unchanged. The inside test
/// allows `m * (1 + 4 eps)` of slack so that projecting twice is a bitwise
/// no-op: a rescaled vector can land a couple of ulps outside the exact ball
/// and must not be rescaled again. Consequently the output norm is bounded
/// by `m * (1 + 4 eps)` rather than by `m` exactly.
pub fn project_ball(v: &Vector, radius: BallRadius) -> Result<Vector> {
    v.ensure_finite("project_ball input")?;
    let m = radius.get();
    let norm = v.norm();
    if norm <= m * (1.0 + 4.0 * f64::EPSILON) {
        Ok(v.clone())
    } else {
        Ok(v * (m / norm))
    }
}
