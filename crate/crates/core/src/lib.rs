//! Dominant-subset selection for time-series panels.
//!
//! Given an `m x n` panel, pick a small set of "central" columns such that
//! every other column can be rebuilt from one central through an affine map,
//! with at most an `epsilon` relative error for all but a `delta` share of
//! targets.
//!
//! ```
//! use domts::selection::{gsa, SolverConfig};
//! use domts::tsd::{generate_synthetic, SyntheticSpec};
//!
//! let spec = SyntheticSpec {
//!     n_objects: 12,
//!     n_times: 16,
//!     n_groups: 3,
//!     noise_level: 0.0,
//!     independent_fraction: 0.0,
//!     seed: 7,
//! };
//! let (panel, _truth) = generate_synthetic(&spec).unwrap();
//! let result = gsa(&panel, &SolverConfig::new(0.01)).unwrap();
//! assert!(result.dominant.len() <= 3);
//! ```

pub mod affine;
pub mod bench;
pub mod cli;
pub mod distance;
pub mod linalg;
pub mod reconstruct;
pub mod selection;
pub mod tsd;

pub use affine::{AffineCoefficients, PairMatrix, TransformState};
pub use distance::{DistanceMeasure, LossReport};
pub use linalg::Matrix;
pub use selection::{gsa, ssa, SelectionResult, SolverConfig};
pub use tsd::{SyntheticSpec, TsdMatrix};
