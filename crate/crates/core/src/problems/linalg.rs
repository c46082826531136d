//! Minimal dense symmetric-positive-definite solve via Cholesky.
//!
//! The quadratic benchmark needs `(A + rI) z = b` for a cached matrix at
//! modest dimension, nothing more, so this stays a plain textbook
//! factorization instead of pulling in a linear-algebra dependency.

use crate::error::{BilevelError, Result};
use crate::vector::Vector;

/// Lower-triangular Cholesky factor of an SPD matrix, stored row-major.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    l: Vec<f64>,
    n: usize,
}

/// Factors a symmetric positive definite matrix given row-major.
pub fn cholesky(a: &[f64], n: usize) -> Result<SpdFactor> {
    assert_eq!(a.len(), n * n, "cholesky: matrix shape mismatch");
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(BilevelError::LinearSolve(format!(
                        "matrix is not positive definite (pivot {s:.3e} at row {i})"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(SpdFactor { l, n })
}

impl SpdFactor {
    /// Solves `A z = b` for the factored `A`.
    pub fn solve(&self, b: &Vector) -> Vector {
        assert_eq!(b.len(), self.n, "solve: rhs length mismatch");
        let n = self.n;
        let l = &self.l;
        // Forward: L w = b.
        let mut w = b.as_slice().to_vec();
        for i in 0..n {
            for k in 0..i {
                w[i] -= l[i * n + k] * w[k];
            }
            w[i] /= l[i * n + i];
        }
        // Backward: L^T z = w.
        for i in (0..n).rev() {
            for k in i + 1..n {
                w[i] -= l[k * n + i] * w[k];
            }
            w[i] /= l[i * n + i];
        }
        Vector::from_vec(w)
    }
}
