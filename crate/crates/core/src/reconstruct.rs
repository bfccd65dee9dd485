//! Rebuilding target columns from the stored dominant set.
//!
//! Decompression needs only the stored columns (centrals plus any pivot a map
//! reads), the coefficients and the per-column scales kept in the
//! [`SelectionResult`]. Original target columns are never consulted unless an
//! evaluation is requested.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{information_loss, relative_error, LossError, LossReport};
use crate::linalg::Matrix;
use crate::selection::SelectionResult;
use crate::tsd::{ColumnSet, TsdError, TsdMatrix};

/// Rounding slack when comparing a recomputed error with `epsilon`.
pub const VIOLATION_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("no coefficients for target(s): {}", .0.join(", "))]
    MissingCoefficients(Vec<String>),
    #[error("stored data lacks column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("non-finite coefficients for target {0:?}")]
    BadCoefficients(String),
    #[error("original panel does not match the selection: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Tsd(#[from] TsdError),
}

pub type Result<T> = std::result::Result<T, ReconstructError>;

/// Rebuilt target columns in original units, possibly none or just one.
pub type ReconstructedTargets = ColumnSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetError {
    pub id: String,
    pub relative_error: f64,
    pub budgeted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub reconstructed: ReconstructedTargets,
    /// Loss over all `n` columns (stored ones are exact); only in evaluation mode.
    pub loss: Option<LossReport>,
    pub target_errors: Vec<TargetError>,
    /// Targets whose relative error exceeds `epsilon`.
    pub violations: Vec<String>,
    /// `violations / n`: stored columns count as exact, matching how `delta` is budgeted.
    pub violation_fraction: f64,
}

/// Rebuilds every target from `stored`, which must hold the columns listed by
/// [`SelectionResult::stored_columns`] in original units.
pub fn reconstruct_targets(stored: &ColumnSet, result: &SelectionResult) -> Result<ReconstructedTargets> {
    let ids = &result.object_ids;
    let missing: Vec<String> = (0..result.n())
        .filter(|&j| !result.dominant.contains(&j) && result.assignment_for(j).is_none())
        .map(|j| ids[j].clone())
        .collect();
    if !missing.is_empty() {
        return Err(ReconstructError::MissingCoefficients(missing));
    }
    let lookup: HashMap<&str, usize> = stored
        .ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let absent: Vec<String> = result
        .stored_columns()
        .into_iter()
        .map(|j| ids[j].clone())
        .filter(|id| !lookup.contains_key(id.as_str()))
        .collect();
    if !absent.is_empty() {
        return Err(ReconstructError::MissingColumns(absent));
    }
    if let Some(a) = result.assignments.iter().find(|a| !a.coefficients.is_finite()) {
        return Err(ReconstructError::BadCoefficients(ids[a.target].clone()));
    }

    let m = stored.timestamps.len();
    let scales = &result.normalization.scales;
    let normalized = |j: usize| -> Vec<f64> {
        stored.columns[lookup[ids[j].as_str()]]
            .iter()
            .map(|x| x / scales[j])
            .collect()
    };
    let columns: Vec<Vec<f64>> = result
        .assignments
        .par_iter()
        .map(|a| {
            let p = normalized(a.central);
            let u = if a.coefficients.uses_pivot() {
                normalized(a.pivot)
            } else {
                vec![0.0; m]
            };
            a.coefficients
                .predict_right(&u, &p)
                .into_iter()
                .map(|x| x * scales[a.target])
                .collect()
        })
        .collect();
    Ok(ReconstructedTargets {
        timestamps: stored.timestamps.clone(),
        ids: result.assignments.iter().map(|a| ids[a.target].clone()).collect(),
        columns,
        unit: stored.unit.clone(),
    })
}

/// Decompresses from `original`'s stored columns and scores every target against it.
pub fn evaluate_reconstruction(original: &TsdMatrix, result: &SelectionResult) -> Result<ReconstructionReport> {
    if original.object_ids() != result.object_ids.as_slice() {
        return Err(ReconstructError::Mismatch("object ids differ".into()));
    }
    let stored = ColumnSet::from_matrix(original, &result.stored_columns());
    let reconstructed = reconstruct_targets(&stored, result)?;
    score(original, result, reconstructed)
}

/// Scores an existing reconstruction against the originals.
pub fn score(
    original: &TsdMatrix,
    result: &SelectionResult,
    reconstructed: ReconstructedTargets,
) -> Result<ReconstructionReport> {
    let full = full_panel(original, &reconstructed)?;
    let mut target_errors = Vec::with_capacity(reconstructed.ids.len());
    for (id, col) in reconstructed.ids.iter().zip(&reconstructed.columns) {
        let j = original.index_of(id).expect("checked by full_panel");
        let budgeted = result.assignment_for(j).is_some_and(|a| a.budgeted);
        target_errors.push(TargetError {
            id: id.clone(),
            relative_error: relative_error(&original.column(j), col),
            budgeted,
        });
    }
    let loss = information_loss(original.values(), &full)?;
    let epsilon = result.config.epsilon;
    let violations: Vec<String> = target_errors
        .iter()
        .filter(|t| !(t.relative_error <= epsilon + VIOLATION_SLACK))
        .map(|t| t.id.clone())
        .collect();
    let violation_fraction = violations.len() as f64 / original.n() as f64;
    Ok(ReconstructionReport {
        reconstructed,
        loss: Some(loss),
        target_errors,
        violations,
        violation_fraction,
    })
}

/// Reconstructed panel with all `n` columns: stored ones copied, targets rebuilt.
pub fn full_panel(original: &TsdMatrix, reconstructed: &ReconstructedTargets) -> Result<Matrix> {
    let mut full = original.values().clone();
    for (id, col) in reconstructed.ids.iter().zip(&reconstructed.columns) {
        let j = original
            .index_of(id)
            .ok_or_else(|| ReconstructError::Mismatch(format!("unknown target {id:?}")))?;
        if col.len() != original.m() {
            return Err(ReconstructError::Mismatch(format!(
                "target {id:?} has {} rows, original has {}",
                col.len(),
                original.m()
            )));
        }
        for (i, x) in col.iter().enumerate() {
            full[(i, j)] = *x;
        }
    }
    Ok(full)
}

/// Cells needed to store the panel raw versus reduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub raw_cells: usize,
    pub central_cells: usize,
    pub coefficient_cells: usize,
    pub pivot_cells: usize,
    pub stored_cells: usize,
    /// `stored_cells / raw_cells`.
    pub ratio: f64,
}

/// `m * |P| + 6 * (n - |P|)` plus one column per pivot read from outside `P`.
pub fn storage_savings(result: &SelectionResult, m: usize) -> StorageReport {
    let n = result.n();
    let central_cells = m * result.dominant.len();
    let coefficient_cells = 6 * (n - result.dominant.len());
    let pivot_cells = m * result.extra_pivots().len();
    let stored_cells = central_cells + coefficient_cells + pivot_cells;
    let raw_cells = m * n;
    StorageReport {
        raw_cells,
        central_cells,
        coefficient_cells,
        pivot_cells,
        stored_cells,
        ratio: stored_cells as f64 / raw_cells as f64,
    }
}
