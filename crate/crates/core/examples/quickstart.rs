//! Select a dominant set on a synthetic panel, rebuild the rest, and report
//! how much storage it saves.
//!
//! Run with: cargo run --example quickstart

use domts::reconstruct::{evaluate_reconstruction, storage_savings};
use domts::tsd::generate_synthetic;
use domts::{gsa, SolverConfig, SyntheticSpec};

fn main() {
    let spec = SyntheticSpec {
        n_objects: 60,
        n_times: 48,
        n_groups: 5,
        noise_level: 0.01,
        independent_fraction: 0.1,
        seed: 42,
    };
    let (panel, _truth) = generate_synthetic(&spec).expect("valid spec");

    let result = gsa(&panel, &SolverConfig::new(0.05)).expect("selection");
    println!(
        "kept {} of {} columns (dsn_ratio {:.3})",
        result.dominant.len(),
        panel.n(),
        result.dsn_ratio
    );

    let report = evaluate_reconstruction(&panel, &result).expect("reconstruction");
    let worst = report
        .target_errors
        .iter()
        .map(|t| t.relative_error)
        .fold(0.0, f64::max);
    println!("worst target error {worst:.4}, mean RMSE {:.4} kWh", report.loss.unwrap().mean_rmse);

    let storage = storage_savings(&result, panel.m());
    println!(
        "{} cells instead of {} ({:.1}% of raw)",
        storage.stored_cells,
        storage.raw_cells,
        100.0 * storage.ratio
    );
}
