//! Dense real matrix algebra for small systems (d ≤ ~25).
//!
//! Everything downstream goes through three primitives: a partial-pivoting
//! linear solve, a Cholesky-based positive-definiteness test and the forward
//! Lyapunov solve `AΣ + ΣAᵀ = −D`. The Lyapunov solver vectorizes the
//! equation over the upper triangle of Σ, so a d×d problem becomes a dense
//! `d(d+1)/2` square system. That is O(d⁶) work, which is nothing at the
//! sizes this crate is used for.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative pivot floor used by [`solve_linear`].
pub const SINGULAR_PIVOT_REL: f64 = 1e-12;

/// Relative pivot floor (times `trace / dim`) used by [`is_positive_definite`].
pub const PD_TOL_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular (pivot {pivot:e} below {threshold:e})")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("vectorized Lyapunov operator is singular (some λi(A) + λj(A) = 0)")]
    SingularLyapunov,
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
}

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (rows, cols),
                got: (data.len() / cols.max(1), cols),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(LinalgError::DimensionMismatch {
                expected: (n_rows, n_cols),
                got: (n_rows, bad.len()),
            });
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Panics if `value` is not finite.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Induced ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Symmetric matrix stored as its packed upper triangle (row by row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricMatrix {
    dim: usize,
    upper: Vec<f64>,
}

/// Number of stored entries for a symmetric `dim × dim` matrix.
#[inline]
pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Position of `(i, j)` in the packed upper triangle; order of `i, j` is irrelevant.
#[inline]
pub fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * dim - r * (r + 1) / 2 + c
}

impl SymmetricMatrix {
    pub fn from_upper(dim: usize, upper: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        if upper.len() != packed_len(dim) {
            return Err(LinalgError::DimensionMismatch {
                expected: (packed_len(dim), 1),
                got: (upper.len(), 1),
            });
        }
        if let Some(k) = upper.iter().position(|v| !v.is_finite()) {
            let (row, col) = unpack_index(dim, k);
            return Err(LinalgError::NonFinite { row, col });
        }
        Ok(Self { dim, upper })
    }

    /// Takes the upper triangle of a square matrix after checking that each
    /// pair `(a_ij, a_ji)` differs by at most `rel_tol · max|a|`. Accepted
    /// pairs are averaged.
    pub fn from_matrix(m: &Matrix, rel_tol: f64) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let scale = m.max_abs();
        let mut upper = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                let gap = (a - b).abs();
                if gap > rel_tol * scale {
                    return Err(LinalgError::NotSymmetric { row: i, col: j, gap });
                }
                upper.push(0.5 * (a + b));
            }
        }
        Self::from_upper(n, upper)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut upper = vec![0.0; packed_len(dim)];
        for (i, &v) in diag.iter().enumerate() {
            upper[packed_index(dim, i, i)] = v;
        }
        Self::from_upper(dim, upper).expect("diagonal entries must be finite and non-empty")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.dim, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "matrix entries must be finite");
        let k = packed_index(self.dim, i, j);
        self.upper[k] = value;
    }

    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reorders rows and columns: entry `(i, j)` of the result is entry
    /// `(order[i], order[j])` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = order.len();
        let mut upper = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                upper.push(self.get(order[i], order[j]));
            }
        }
        Self { dim: n, upper }
    }
}

fn unpack_index(dim: usize, k: usize) -> (usize, usize) {
    let mut row = 0;
    let mut start = 0;
    while start + (dim - row) <= k {
        start += dim - row;
        row += 1;
    }
    (row, row + (k - start))
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricMatrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_matrix(&Matrix::from_rows(&rows)?, 0.0)
    }
}

impl From<SymmetricMatrix> for Vec<Vec<f64>> {
    fn from(s: SymmetricMatrix) -> Self {
        s.to_matrix().to_rows()
    }
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, 1),
            got: (b.len(), 1),
        });
    }
    let threshold = SINGULAR_PIVOT_REL * a.norm_inf();
    let mut lu = a.as_slice().to_vec();
    let mut x = b.to_vec();

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs < threshold || pivot_abs == 0.0 {
            return Err(LinalgError::SingularMatrix {
                pivot: pivot_abs,
                threshold,
            });
        }
        if pivot_row != col {
            for k in 0..n {
                lu.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = 0.0;
            for k in col + 1..n {
                lu[r * n + k] -= factor * lu[col * n + k];
            }
            x[r] -= factor * x[col];
        }
    }

    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| lu[row * n + k] * x[k]).sum();
        x[row] = (x[row] - tail) / lu[row * n + row];
    }
    Ok(x)
}

/// Cholesky factor `L` (row-major lower triangle) or `None` when some pivot
/// `l_jj²` fails to exceed `1e-10 · trace / dim`.
pub fn cholesky(s: &SymmetricMatrix) -> Option<Matrix> {
    let n = s.dim();
    let trace = s.trace();
    if trace.is_nan() || trace <= 0.0 {
        return None;
    }
    let pd_tol = PD_TOL_REL * trace / n as f64;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = s.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if pivot.is_nan() || pivot <= pd_tol {
            return None;
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / ljj);
        }
    }
    Some(l)
}

pub fn is_positive_definite(s: &SymmetricMatrix) -> bool {
    cholesky(s).is_some()
}

/// Builds the vectorized Lyapunov operator `vech(Σ) ↦ vech(AΣ + ΣAᵀ)`.
fn lyapunov_operator(a: &Matrix) -> Matrix {
    let n = a.rows();
    let m = packed_len(n);
    let mut op = Matrix::zeros(m, m);
    let mut row = 0;
    for i in 0..n {
        for j in i..n {
            // (AΣ)_ij + (ΣAᵀ)_ij = Σ_k A_ik Σ_kj + Σ_k A_jk Σ_ik
            for k in 0..n {
                let aik = a.get(i, k);
                if aik != 0.0 {
                    let c = packed_index(n, k, j);
                    op.set(row, c, op.get(row, c) + aik);
                }
                let ajk = a.get(j, k);
                if ajk != 0.0 {
                    let c = packed_index(n, i, k);
                    op.set(row, c, op.get(row, c) + ajk);
                }
            }
            row += 1;
        }
    }
    op
}

/// Solves `AΣ + ΣAᵀ = −D` for symmetric Σ.
pub fn solve_lyapunov_forward(a: &Matrix, d: &SymmetricMatrix) -> Result<SymmetricMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if d.dim() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: (d.dim(), d.dim()),
        });
    }
    let op = lyapunov_operator(a);
    let rhs: Vec<f64> = d.packed().iter().map(|v| -v).collect();
    let vech = match solve_linear(&op, &rhs) {
        Ok(v) => v,
        Err(LinalgError::SingularMatrix { .. }) => return Err(LinalgError::SingularLyapunov),
        Err(e) => return Err(e),
    };
    if vech.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::SingularLyapunov);
    }
    SymmetricMatrix::from_upper(a.rows(), vech)
}

/// Max-abs entry of `AΣ + ΣAᵀ + D`.
///
/// Panics if the dimensions are not conformable.
pub fn lyapunov_residual(a: &Matrix, sigma: &SymmetricMatrix, d: &SymmetricMatrix) -> f64 {
    let n = a.rows();
    assert!(
        a.is_square() && sigma.dim() == n && d.dim() == n,
        "lyapunov_residual: non-conformable dimensions"
    );
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut v = d.get(i, j);
            for k in 0..n {
                v += a.get(i, k) * sigma.get(k, j) + sigma.get(i, k) * a.get(j, k);
            }
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// The scale `‖A‖∞‖Σ‖∞ + ‖D‖∞` against which Lyapunov residuals are judged.
pub fn lyapunov_scale(a: &Matrix, sigma: &SymmetricMatrix, d: &SymmetricMatrix) -> f64 {
    a.norm_inf() * sigma.norm_inf() + d.norm_inf()
}
