//! The two-column affine relation model and the streaming transform state.
//!
//! A pair matrix stacks the shared pivot column `u` next to a second column:
//! the central `p` for a pivot pair, the candidate `v` for a target pair. An
//! affine map sends the pivot pair to the target pair:
//!
//! ```text
//! (u', v') = (u, p) * A + 1 * b
//! ```
//!
//! so column `j` of the prediction is `u * a[0][j] + p * a[1][j] + b[j]`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{append_row_update, gram_inverse, solve_least_squares, LinalgError, Matrix};

/// Rows needed for an overdetermined pair fit (two slopes plus a bias).
pub const MIN_PAIR_ROWS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffineError {
    #[error("pair columns differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("pivot pair has {pivot} rows but target pair has {target}")]
    RowMismatch { pivot: usize, target: usize },
    #[error("a pair fit needs at least {MIN_PAIR_ROWS} rows, got {0}")]
    TooFewRows(usize),
    #[error("non-finite entry at row {0}")]
    NonFinite(usize),
    #[error("design is rank deficient; the streaming state needs a full-rank batch fit")]
    RankDeficient,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, AffineError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    PivotPair,
    TargetPair,
}

/// An `m x 2` matrix `(left, right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    left: Vec<f64>,
    right: Vec<f64>,
    kind: PairKind,
}

impl PairMatrix {
    pub fn new(left: Vec<f64>, right: Vec<f64>, kind: PairKind) -> Result<Self> {
        if left.len() != right.len() {
            return Err(AffineError::LengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        if let Some(i) = left
            .iter()
            .zip(&right)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(AffineError::NonFinite(i));
        }
        Ok(Self { left, right, kind })
    }

    /// `(u, p)`.
    pub fn pivot(u: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(u.to_vec(), p.to_vec(), PairKind::PivotPair)
    }

    /// `(u, v)`.
    pub fn target(u: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(u.to_vec(), v.to_vec(), PairKind::TargetPair)
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.left.len()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&[&self.left, &self.right]).expect("validated on construction")
    }

    /// The augmented design `(u, p, 1)`.
    pub fn design(&self) -> Matrix {
        self.to_matrix().augment_ones()
    }
}

/// `(A, b)` of one affine map between pair matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCoefficients {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineCoefficients {
    pub fn identity() -> Self {
        Self {
            a: [[1.0, 0.0], [0.0, 1.0]],
            b: [0.0, 0.0],
        }
    }

    /// Reads `A` from the first two rows of a `3 x 2` solution and `b` from the last.
    fn from_solution(r: &Matrix) -> Self {
        Self {
            a: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
            b: [r[(2, 0)], r[(2, 1)]],
        }
    }

    /// `[a11, a12, a21, a22, b1, b2]`.
    pub fn as_array(&self) -> [f64; 6] {
        [self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1], self.b[0], self.b[1]]
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            a: [[x[0], x[1]], [x[2], x[3]]],
            b: [x[4], x[5]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    /// Predicted second column: `u * a12 + p * a22 + b2`.
    pub fn predict_right(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(p)
            .map(|(ui, pi)| ui * self.a[0][1] + pi * self.a[1][1] + self.b[1])
            .collect()
    }

    /// Whether the second output column reads the pivot column at all.
    pub fn uses_pivot(&self) -> bool {
        self.a[0][1] != 0.0
    }
}

/// A fitted map with its post-fit residual `target - fitted`.
#[derive(Debug, Clone)]
pub struct PairFit {
    pub coefficients: AffineCoefficients,
    pub residual: Matrix,
    /// The pair design was numerically singular and the ridge fallback engaged.
    pub rank_deficient: bool,
}

impl PairFit {
    /// Euclidean norm of the second residual column.
    pub fn right_residual_norm(&self) -> f64 {
        (0..self.residual.rows())
            .map(|i| self.residual[(i, 1)].powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_pairs(pivot: &PairMatrix, target: &PairMatrix) -> Result<()> {
    if pivot.rows() != target.rows() {
        return Err(AffineError::RowMismatch {
            pivot: pivot.rows(),
            target: target.rows(),
        });
    }
    if pivot.rows() < MIN_PAIR_ROWS {
        return Err(AffineError::TooFewRows(pivot.rows()));
    }
    Ok(())
}

fn residual_of(coefficients: &AffineCoefficients, pivot: &PairMatrix, target: &PairMatrix) -> Matrix {
    let fitted = apply_affine(coefficients, pivot);
    target
        .to_matrix()
        .sub(&fitted.to_matrix())
        .expect("shapes checked")
}

/// Joint least-squares fit of both target columns from `(u, p, 1)`.
pub fn fit_pair_affine(pivot: &PairMatrix, target: &PairMatrix, ridge: f64) -> Result<PairFit> {
    check_pairs(pivot, target)?;
    let sol = solve_least_squares(&pivot.design(), &target.to_matrix(), ridge)?;
    let coefficients = AffineCoefficients::from_solution(&sol.coefficients);
    Ok(PairFit {
        residual: residual_of(&coefficients, pivot, target),
        coefficients,
        rank_deficient: sol.rank_deficient,
    })
}

/// Column-by-column fit: the shared column maps to itself and the second
/// target column is regressed on `(p, 1)` alone, so `a12 = a21 = 0`.
pub fn fit_pair_columnwise(pivot: &PairMatrix, target: &PairMatrix, ridge: f64) -> Result<PairFit> {
    check_pairs(pivot, target)?;
    let design = Matrix::from_columns(&[pivot.right()])?.augment_ones();
    let response = Matrix::from_columns(&[target.right()])?;
    let sol = solve_least_squares(&design, &response, ridge)?;
    let coefficients = AffineCoefficients {
        a: [[1.0, 0.0], [0.0, sol.coefficients[(0, 0)]]],
        b: [0.0, sol.coefficients[(1, 0)]],
    };
    Ok(PairFit {
        residual: residual_of(&coefficients, pivot, target),
        coefficients,
        rank_deficient: sol.rank_deficient,
    })
}

/// `pivot * A + 1 * b`.
pub fn apply_affine(coefficients: &AffineCoefficients, pivot: &PairMatrix) -> PairMatrix {
    let (a, b) = (&coefficients.a, &coefficients.b);
    let col = |j: usize| -> Vec<f64> {
        pivot
            .left
            .iter()
            .zip(&pivot.right)
            .map(|(u, p)| u * a[0][j] + p * a[1][j] + b[j])
            .collect()
    };
    PairMatrix {
        left: col(0),
        right: col(1),
        kind: PairKind::TargetPair,
    }
}

/// One row of the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub target_id: String,
    pub central_id: String,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
}

impl CoefficientRecord {
    pub fn new(target_id: &str, central_id: &str, c: &AffineCoefficients) -> Self {
        let [a11, a12, a21, a22, b1, b2] = c.as_array();
        Self {
            target_id: target_id.into(),
            central_id: central_id.into(),
            a11,
            a12,
            a21,
            a22,
            b1,
            b2,
        }
    }

    pub fn coefficients(&self) -> AffineCoefficients {
        AffineCoefficients::from_array([self.a11, self.a12, self.a21, self.a22, self.b1, self.b2])
    }
}

/// Writes `target_id,central_id,a11,a12,a21,a22,b1,b2` with round-trip exact floats.
pub fn write_coefficients_csv<W: Write>(writer: W, records: &[CoefficientRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["target_id", "central_id", "a11", "a12", "a21", "a22", "b1", "b2"])?;
    for r in records {
        let mut row = vec![r.target_id.clone(), r.central_id.clone()];
        row.extend(
            [r.a11, r.a12, r.a21, r.a22, r.b1, r.b2]
                .iter()
                .map(|x| crate::tsd::format_float(*x)),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coefficients_csv<R: std::io::Read>(reader: R) -> csv::Result<Vec<CoefficientRecord>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

/// The augmented transform `R` of `S = P' R` with its cached Gram inverse.
///
/// Values are immutable: [`TransformState::stream_append`] returns a new state.
#[derive(Debug, Clone)]
pub struct TransformState {
    r: Matrix,
    gram_inverse: Matrix,
    rows_seen: usize,
}

impl TransformState {
    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn gram_inverse(&self) -> &Matrix {
        &self.gram_inverse
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Folds one more observation in without refactorising.
    pub fn stream_append(&self, design_row: &[f64], response_row: &[f64]) -> Result<Self> {
        let up = append_row_update(&self.r, &self.gram_inverse, design_row, response_row)?;
        Ok(Self {
            r: up.coefficients,
            gram_inverse: up.gram_inverse,
            rows_seen: self.rows_seen + 1,
        })
    }
}

/// Batch-solves `S = P' R` where `design` already carries its ones column.
pub fn init_transform(design: &Matrix, response: &Matrix) -> Result<TransformState> {
    if design.rows() < design.cols() {
        return Err(AffineError::RankDeficient);
    }
    let sol = solve_least_squares(design, response, 0.0)?;
    if sol.rank_deficient {
        return Err(AffineError::RankDeficient);
    }
    let (gi, _) = gram_inverse(design, 0.0)?;
    Ok(TransformState {
        r: sol.coefficients,
        gram_inverse: gi,
        rows_seen: design.rows(),
    })
}

/// Relative Frobenius distance, used to compare streamed and batch solutions.
pub fn relative_difference(a: &Matrix, b: &Matrix) -> f64 {
    let diff = a.sub(b).map(|d| d.frobenius_norm()).unwrap_or(f64::INFINITY);
    diff / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
