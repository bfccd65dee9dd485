//! Small dense linear-algebra kernel.
//!
//! Everything here works on tall, thin systems (an `m x 3` pair design or an
//! `m x (n+1)` augmented panel), so a row-major `Vec<f64>` and a Cholesky
//! factorisation of the Gram matrix are all that is needed.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Relative pivot threshold below which the Gram matrix is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Ridge applied on fallback, relative to `trace(Gram) / cols`.
const FALLBACK_RIDGE_SCALE: f64 = 1e-10;

/// Smallest admissible denominator of the rank-one update.
pub const MIN_UPDATE_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    Empty { rows: usize, cols: usize },
    #[error("data length {len} does not match {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative ridge {0}")]
    NegativeRidge(f64),
    #[error("Gram matrix is not positive definite even after ridge fallback")]
    NotPositiveDefinite,
    #[error(
        "rank-one update is singular (denominator {denominator:.3e}); refit the batch solution"
    )]
    SingularUpdate { denominator: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self { rows, cols, data })
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::DimensionMismatch(
                "columns differ in length".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other` without materialising the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "({}x{})^T times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows.min(self.cols) {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Appends a row, returning a new matrix.
    pub fn with_row(&self, row: &[f64]) -> Result<Matrix> {
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "row of length {} appended to {} columns",
                row.len(),
                self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Matrix::new(self.rows + 1, self.cols, data)
    }

    /// Returns `[self | 1]`, the design augmented with an intercept column.
    pub fn augment_ones(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(1.0);
        }
        Matrix {
            rows: self.rows,
            cols: self.cols + 1,
            data,
        }
    }

    fn same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Serialised as an array of rows.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|r| self.row(r)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factorises a symmetric matrix. Returns `None` when a pivot drops below
    /// `PIVOT_TOLERANCE` times the largest diagonal entry.
    pub fn factor(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        if max_diag <= 0.0 {
            return None;
        }
        let threshold = PIVOT_TOLERANCE * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > threshold) {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Self { n, lower: l })
    }

    /// Solves `A x = b` in place for a single right-hand side.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; self.n];
        for c in 0..b.cols() {
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = b[(r, c)];
            }
            self.solve_in_place(&mut col);
            for (r, v) in col.iter().enumerate() {
                out[(r, c)] = *v;
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix {
        let mut inv = self.solve(&Matrix::identity(self.n));
        // symmetrise away round-off
        for i in 0..self.n {
            for j in 0..i {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }
}

/// Result of a (possibly ridge-regularised) normal-equation solve.
#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    pub coefficients: Matrix,
    pub residual_norm: f64,
    /// Set when the Gram matrix was numerically singular and the ridge fallback engaged.
    pub rank_deficient: bool,
    /// Ridge actually added to the Gram diagonal.
    pub ridge_used: f64,
}

/// Factorises `design^T design + ridge I`, engaging the fallback ridge if needed.
/// Returns `(factor, ridge_used, rank_deficient)`.
pub(crate) fn factor_gram(design: &Matrix, ridge: f64) -> Result<(Cholesky, f64, bool)> {
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(LinalgError::NegativeRidge(ridge));
    }
    let mut gram = design.t_matmul(design)?;
    let n = gram.rows();
    for i in 0..n {
        gram[(i, i)] += ridge;
    }
    if let Some(ch) = Cholesky::factor(&gram) {
        return Ok((ch, ridge, false));
    }
    let trace = gram.trace();
    let fallback = if trace > 0.0 {
        FALLBACK_RIDGE_SCALE * trace / n as f64
    } else {
        FALLBACK_RIDGE_SCALE
    };
    for i in 0..n {
        gram[(i, i)] += fallback;
    }
    let ch = Cholesky::factor(&gram).ok_or(LinalgError::NotPositiveDefinite)?;
    Ok((ch, ridge + fallback, true))
}

/// Minimises `||design * R - response||_F` through the (ridged) normal equations.
pub fn solve_least_squares(
    design: &Matrix,
    response: &Matrix,
    ridge: f64,
) -> Result<LeastSquaresSolution> {
    if design.rows() != response.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "design has {} rows, response has {}",
            design.rows(),
            response.rows()
        )));
    }
    let (ch, ridge_used, mut rank_deficient) = factor_gram(design, ridge)?;
    if design.rows() < design.cols() {
        rank_deficient = true;
    }
    let rhs = design.t_matmul(response)?;
    let coefficients = ch.solve(&rhs);
    let residual_norm = design.matmul(&coefficients)?.sub(response)?.frobenius_norm();
    Ok(LeastSquaresSolution {
        coefficients,
        residual_norm,
        rank_deficient,
        ridge_used,
    })
}

/// Inverse of `design^T design + ridge I`, with the same fallback as [`solve_least_squares`].
pub fn gram_inverse(design: &Matrix, ridge: f64) -> Result<(Matrix, bool)> {
    let (ch, _, rank_deficient) = factor_gram(design, ridge)?;
    Ok((ch.inverse(), rank_deficient))
}

/// Output of one recursive row append.
#[derive(Debug, Clone)]
pub struct RowUpdate {
    pub coefficients: Matrix,
    pub gram_inverse: Matrix,
}

/// Folds one new observation into a least-squares solution in `O(k^2)`.
///
/// `coefficients` is the current `k x r` solution and `gram_inverse` the cached
/// `(X^T X)^{-1}`. The Gram inverse is refreshed with the Sherman-Morrison
/// identity and the coefficients are corrected by the gain times the
/// prediction error of the new row.
pub fn append_row_update(
    coefficients: &Matrix,
    gram_inverse: &Matrix,
    design_row: &[f64],
    response_row: &[f64],
) -> Result<RowUpdate> {
    let k = coefficients.rows();
    let r = coefficients.cols();
    if gram_inverse.rows() != k || gram_inverse.cols() != k {
        return Err(LinalgError::DimensionMismatch(format!(
            "Gram inverse is {}x{}, expected {k}x{k}",
            gram_inverse.rows(),
            gram_inverse.cols()
        )));
    }
    if design_row.len() != k || response_row.len() != r {
        return Err(LinalgError::DimensionMismatch(format!(
            "row lengths ({}, {}) do not match ({k}, {r})",
            design_row.len(),
            response_row.len()
        )));
    }
    if let Some(i) = design_row.iter().chain(response_row).position(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite { row: 0, col: i });
    }

    // gain = G^{-1} x
    let gain: Vec<f64> = (0..k)
        .map(|i| {
            gram_inverse
                .row(i)
                .iter()
                .zip(design_row)
                .map(|(g, x)| g * x)
                .sum()
        })
        .collect();
    let denominator = 1.0 + design_row.iter().zip(&gain).map(|(x, g)| x * g).sum::<f64>();
    if denominator.abs() < MIN_UPDATE_DENOMINATOR {
        return Err(LinalgError::SingularUpdate { denominator });
    }

    let mut new_inverse = gram_inverse.clone();
    for i in 0..k {
        for j in 0..k {
            new_inverse[(i, j)] -= gain[i] * gain[j] / denominator;
        }
    }
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (new_inverse[(i, j)] + new_inverse[(j, i)]);
            new_inverse[(i, j)] = avg;
            new_inverse[(j, i)] = avg;
        }
    }

    // innovation = s - x^T R
    let innovation: Vec<f64> = (0..r)
        .map(|c| {
            response_row[c]
                - (0..k)
                    .map(|i| design_row[i] * coefficients[(i, c)])
                    .sum::<f64>()
        })
        .collect();
    let mut updated = coefficients.clone();
    for i in 0..k {
        let g = gain[i] / denominator;
        for c in 0..r {
            updated[(i, c)] += g * innovation[c];
        }
    }
    Ok(RowUpdate {
        coefficients: updated,
        gram_inverse: new_inverse,
    })
}
