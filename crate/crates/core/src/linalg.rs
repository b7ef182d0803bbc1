//! Small vector and dense-matrix helpers shared by the solver modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn norm_inf(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn check_len(v: &Vector, expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            actual: v.len(),
        })
    }
}

/// Copies the lower triangle onto the upper one so the result is exactly symmetric.
pub fn symmetrize_from_lower(m: &mut Matrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}

/// Cholesky factorization `A = U'U` of a symmetric positive definite matrix.
///
/// The upper factor is kept column-major so both the factorization and the
/// triangular solves walk contiguous columns.
#[derive(Debug, Clone)]
pub struct Cholesky {
    upper: Matrix,
}

impl Cholesky {
    /// Factors `a`, reading only its upper triangle.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: a.ncols(),
            });
        }
        let mut u = Matrix::zeros(n, n);
        for j in 0..n {
            let (head, tail) = u.as_mut_slice().split_at_mut(j * n);
            let col_j = &mut tail[..n];
            for i in 0..j {
                let col_i = &head[i * n..i * n + n];
                let mut v = a[(i, j)];
                for k in 0..i {
                    v -= col_i[k] * col_j[k];
                }
                col_j[i] = v / col_i[i];
            }
            let diag = a[(j, j)] - col_j[..j].iter().map(|v| v * v).sum::<f64>();
            if !(diag > 0.0 && diag.is_finite()) {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: diag,
                });
            }
            col_j[j] = diag.sqrt();
        }
        Ok(Self { upper: u })
    }

    pub fn dim(&self) -> usize {
        self.upper.nrows()
    }

    /// Smallest diagonal entry of the factor.
    pub fn min_pivot(&self) -> f64 {
        self.upper.diagonal().min()
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &Vector) -> Vector {
        let n = self.dim();
        let u = self.upper.as_slice();
        let mut z = rhs.clone();
        {
            let z = z.as_mut_slice();
            for i in 0..n {
                let col = &u[i * n..i * n + i];
                let mut v = z[i];
                for (k, c) in col.iter().enumerate() {
                    v -= c * z[k];
                }
                z[i] = v / u[i * n + i];
            }
            for i in (0..n).rev() {
                let xi = z[i] / u[i * n + i];
                z[i] = xi;
                let col = &u[i * n..i * n + i];
                for (k, c) in col.iter().enumerate() {
                    z[k] -= xi * c;
                }
            }
        }
        z
    }

    /// Reassembles `U'U`; used by tests and diagnostics.
    pub fn reconstruct(&self) -> Matrix {
        self.upper.transpose() * &self.upper
    }
}
