//! Small dense linear algebra for the `d × d` design matrices used by the
//! estimator. Dimensions in this domain are tiny (single digits), so a flat
//! row-major `Vec<f64>` beats pulling in a general matrix library.

use alloc::vec;
use alloc::vec::Vec;

/// Inner product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// `scale * I`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != dim²`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data has wrong length");
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.dim).map(|i| x[i] * dot(self.row(i), x)).sum()
    }

    /// `M += scale · u vᵀ`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64], scale: f64) {
        let n = self.dim;
        for (row, &ui) in self.data.chunks_exact_mut(n).zip(u) {
            let ui = scale * ui;
            for (m, &vj) in row.iter_mut().zip(v) {
                *m += ui * vj;
            }
        }
    }

    /// Replaces `M` with `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    /// `max |(M·N − I)_ij|`, the residual used to monitor an inverse.
    pub fn identity_residual(&self, inverse: &Matrix) -> f64 {
        let prod = self.mul(inverse);
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod.data[i * n + j] - target).abs());
            }
        }
        worst
    }

    /// Gauss–Jordan inversion with partial pivoting. Returns `None` when a
    /// pivot underflows, i.e. the matrix is numerically singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut work = self.data.clone();
        let mut inv = Matrix::scaled_identity(n, 1.0).data;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&a, &b| {
                    work[a * n + col]
                        .abs()
                        .total_cmp(&work[b * n + col].abs())
                })
                .unwrap_or(col);
            let pivot = work[pivot_row * n + col];
            if !(pivot.abs() > f64::MIN_POSITIVE) {
                return None;
            }
            if pivot_row != col {
                for j in 0..n {
                    work.swap(col * n + j, pivot_row * n + j);
                    inv.swap(col * n + j, pivot_row * n + j);
                }
            }
            let scale = 1.0 / pivot;
            for j in 0..n {
                work[col * n + j] *= scale;
                inv[col * n + j] *= scale;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = work[row * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work[row * n + j] -= factor * work[col * n + j];
                    inv[row * n + j] -= factor * inv[col * n + j];
                }
            }
        }
        Some(Matrix { dim: n, data: inv })
    }

    /// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`, or `None` if the
    /// matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.data[i * n + k] * l.data[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return None;
                    }
                    l.data[i * n + i] = libm::sqrt(sum);
                } else {
                    l.data[i * n + j] = sum / l.data[j * n + j];
                }
            }
        }
        Some(l)
    }
}
