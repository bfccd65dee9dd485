//! Linear correlation distances between pair matrices, and loss metrics.
//!
//! A distance is the relative residual `||v - v'|| / ||v||` of the best
//! affine prediction of the target column `v`. Two fits are offered:
//!
//! * [`DistanceMeasure::Aff`] fits the whole target pair `(u, v)` jointly
//!   from `(u, p, 1)`, so the shared pivot `u` also helps explain `v`.
//! * [`DistanceMeasure::Ls`] fits each column on its own: `v` from `(p, 1)`.
//!
//! Because the AFF design contains the LS design, `aff <= ls` for every pair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{fit_pair_affine, fit_pair_columnwise, AffineCoefficients, AffineError, PairFit, PairMatrix};
use crate::linalg::Matrix;
use crate::tsd::NormalizationInfo;

/// Relative spread under which a central column counts as constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMeasure {
    #[default]
    Aff,
    Ls,
}

impl fmt::Display for DistanceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Aff => "AFF",
            Self::Ls => "LS",
        })
    }
}

impl FromStr for DistanceMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aff" => Ok(Self::Aff),
            "ls" => Ok(Self::Ls),
            other => Err(format!("unknown measure {other:?} (expected aff or ls)")),
        }
    }
}

/// One evaluated pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcdOutcome {
    /// Relative residual of the target column; `+inf` when the pair cannot dominate.
    pub distance: f64,
    pub coefficients: AffineCoefficients,
    /// The central column is constant, so it carries no shape to transfer.
    pub degenerate: bool,
    /// The fit needed the ridge fallback.
    pub rank_deficient: bool,
}

/// `||v - v_hat|| / ||v||`, with `0/0 = 0` and `x/0 = inf`.
pub fn relative_error(v: &[f64], v_hat: &[f64]) -> f64 {
    let num = v
        .iter()
        .zip(v_hat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Root mean square of `v - v_hat`.
pub fn rmse(v: &[f64], v_hat: &[f64]) -> f64 {
    let ss: f64 = v.iter().zip(v_hat).map(|(a, b)| (a - b).powi(2)).sum();
    (ss / v.len().max(1) as f64).sqrt()
}

pub(crate) fn is_constant(x: &[f64]) -> bool {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let spread = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    spread <= CONSTANT_TOLERANCE * scale
}

/// Distance from pivot pair `(u, p)` to target pair `(u, v)` with no extra ridge.
pub fn lcd(measure: DistanceMeasure, pivot: &PairMatrix, target: &PairMatrix) -> Result<LcdOutcome, AffineError> {
    lcd_with_ridge(measure, pivot, target, 0.0)
}

pub fn lcd_with_ridge(
    measure: DistanceMeasure,
    pivot: &PairMatrix,
    target: &PairMatrix,
    ridge: f64,
) -> Result<LcdOutcome, AffineError> {
    let mut fit = match measure {
        DistanceMeasure::Aff => fit_pair_affine(pivot, target, ridge)?,
        DistanceMeasure::Ls => fit_pair_columnwise(pivot, target, ridge)?,
    };
    // When u lies in span(p, 1) it adds nothing, and the ridge would only smear
    // weight onto it; the column-wise map fits as well without reading u.
    if measure == DistanceMeasure::Aff && fit.rank_deficient && !is_constant(pivot.right()) {
        fit = PairFit {
            rank_deficient: true,
            ..fit_pair_columnwise(pivot, target, ridge)?
        };
    }
    if is_constant(pivot.right()) {
        return Ok(LcdOutcome {
            distance: f64::INFINITY,
            coefficients: fit.coefficients,
            degenerate: true,
            rank_deficient: fit.rank_deficient,
        });
    }
    let v_hat = fit.coefficients.predict_right(pivot.left(), pivot.right());
    Ok(LcdOutcome {
        distance: relative_error(target.right(), &v_hat),
        coefficients: fit.coefficients,
        degenerate: false,
        rank_deficient: fit.rank_deficient,
    })
}

/// Relative error of a caller-supplied map, recomputed from the columns.
pub fn recheck_distance(coefficients: &AffineCoefficients, u: &[f64], p: &[f64], v: &[f64]) -> f64 {
    relative_error(v, &coefficients.predict_right(u, p))
}

/// Cached column inner products for a cheap lower-cost screen of pairs.
///
/// The residual of a least-squares fit satisfies
/// `||r||^2 = v.v - c^T G^{-1} c` with `G` the design Gram matrix and
/// `c = D^T v`. All of these are entries of the panel's own Gram matrix, so
/// once it is cached each pair costs a 3x3 solve instead of an `O(m)` fit.
/// The screen only ever rejects with a safety margin; accepted pairs still
/// get the exact fit, so decisions never change.
#[derive(Debug, Clone)]
pub struct GramCache {
    n: usize,
    m: f64,
    sums: Vec<f64>,
    cross: Vec<f64>,
}

/// Multiplicative and additive slack applied before rejecting (relative to `v.v`).
const SCREEN_REL_MARGIN: f64 = 1e-6;
const SCREEN_ABS_MARGIN: f64 = 1e-9;
/// Smallest admissible Cholesky pivot of the small Gram matrix, relative to its diagonal.
const SCREEN_PIVOT_TOLERANCE: f64 = 1e-6;

impl GramCache {
    pub fn new(columns: &[Vec<f64>]) -> Self {
        let n = columns.len();
        let m = columns.first().map_or(0, Vec::len) as f64;
        let sums = columns.iter().map(|c| c.iter().sum()).collect();
        let mut cross = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let d: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
                cross[i * n + j] = d;
                cross[j * n + i] = d;
            }
        }
        Self { n, m, sums, cross }
    }

    fn dot(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.n + j]
    }

    /// Estimated squared residual of `v` regressed on the design, or `None`
    /// when the small Gram matrix is too ill-conditioned to trust.
    fn residual_sq(&self, design: &[usize], v: usize) -> Option<f64> {
        // columns of the design: cached indices then the ones column
        let k = design.len() + 1;
        let entry = |a: usize, b: usize| -> f64 {
            match (a < design.len(), b < design.len()) {
                (true, true) => self.dot(design[a], design[b]),
                (true, false) => self.sums[design[a]],
                (false, true) => self.sums[design[b]],
                (false, false) => self.m,
            }
        };
        let rhs = |a: usize| -> f64 {
            if a < design.len() {
                self.dot(design[a], v)
            } else {
                self.sums[v]
            }
        };
        let mut l = [[0.0f64; 3]; 3];
        for j in 0..k {
            let mut d = entry(j, j);
            let diag = d;
            for item in l[j].iter().take(j) {
                d -= item * item;
            }
            if !(d > SCREEN_PIVOT_TOLERANCE * diag) {
                return None;
            }
            l[j][j] = d.sqrt();
            for i in j + 1..k {
                let mut s = entry(i, j);
                for t in 0..j {
                    s -= l[i][t] * l[j][t];
                }
                l[i][j] = s / l[j][j];
            }
        }
        // ||L^{-1} c||^2 = c^T G^{-1} c
        let mut y = [0.0f64; 3];
        let mut explained = 0.0;
        for i in 0..k {
            let mut s = rhs(i);
            for t in 0..i {
                s -= l[i][t] * y[t];
            }
            y[i] = s / l[i][i];
            explained += y[i] * y[i];
        }
        Some(self.dot(v, v) - explained)
    }

    /// Returns `false` only when the pair certainly exceeds `epsilon`.
    pub fn may_accept(&self, measure: DistanceMeasure, u: usize, p: usize, v: usize, epsilon: f64) -> bool {
        let design: &[usize] = match measure {
            DistanceMeasure::Aff => &[u, p],
            DistanceMeasure::Ls => &[p],
        };
        let vv = self.dot(v, v);
        match self.residual_sq(design, v) {
            Some(est) => est <= epsilon * epsilon * vv * (1.0 + SCREEN_REL_MARGIN) + SCREEN_ABS_MARGIN * vv,
            None => true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: original is {0}x{1}, reconstruction is {2}x{3}")]
    Shape(usize, usize, usize, usize),
    #[error("{0} normalization scales for {1} columns")]
    Scales(usize, usize),
}

/// Element-wise loss `E = |S - S'|` with its per-column RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub loss_matrix: Matrix,
    pub rmse: Vec<f64>,
    pub mean_rmse: f64,
}

pub fn information_loss(original: &Matrix, reconstructed: &Matrix) -> Result<LossReport, LossError> {
    if original.rows() != reconstructed.rows() || original.cols() != reconstructed.cols() {
        return Err(LossError::Shape(
            original.rows(),
            original.cols(),
            reconstructed.rows(),
            reconstructed.cols(),
        ));
    }
    let (m, n) = (original.rows(), original.cols());
    let mut loss = Matrix::zeros(m, n);
    let mut ss = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            let d = original[(i, j)] - reconstructed[(i, j)];
            loss[(i, j)] = d.abs();
            ss[j] += d * d;
        }
    }
    let rmse: Vec<f64> = ss.iter().map(|s| (s / m as f64).sqrt()).collect();
    let mean_rmse = rmse.iter().sum::<f64>() / n as f64;
    Ok(LossReport {
        loss_matrix: loss,
        rmse,
        mean_rmse,
    })
}

/// Like [`information_loss`] for normalised inputs, reporting in original units.
pub fn information_loss_scaled(
    original: &Matrix,
    reconstructed: &Matrix,
    norm: &NormalizationInfo,
) -> Result<LossReport, LossError> {
    if norm.scales.len() != original.cols() {
        return Err(LossError::Scales(norm.scales.len(), original.cols()));
    }
    let rescale = |x: &Matrix| {
        let mut y = x.clone();
        for i in 0..y.rows() {
            for (j, s) in norm.scales.iter().enumerate() {
                y[(i, j)] *= s;
            }
        }
        y
    };
    if original.rows() != reconstructed.rows() || original.cols() != reconstructed.cols() {
        return Err(LossError::Shape(
            original.rows(),
            original.cols(),
            reconstructed.rows(),
            reconstructed.cols(),
        ));
    }
    information_loss(&rescale(original), &rescale(reconstructed))
}
