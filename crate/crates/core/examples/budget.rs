//! Let a few targets exceed epsilon and compare how SSA and GSA spend that budget.
//!
//! Run with: cargo run --example budget

use domts::reconstruct::evaluate_reconstruction;
use domts::tsd::generate_synthetic;
use domts::{gsa, ssa, SolverConfig, SyntheticSpec};

fn main() {
    let spec = SyntheticSpec {
        n_objects: 80,
        n_times: 40,
        n_groups: 6,
        noise_level: 0.04,
        independent_fraction: 0.15,
        seed: 5,
    };
    let (panel, _) = generate_synthetic(&spec).unwrap();

    println!("delta  method  |P|  budget  mean RMSE");
    for delta in [0.0, 0.05, 0.1] {
        let config = SolverConfig::new(0.05).with_delta(delta);
        for (name, result) in [("SSA", ssa(&panel, &config)), ("GSA", gsa(&panel, &config))] {
            let result = result.unwrap();
            let loss = evaluate_reconstruction(&panel, &result).unwrap().loss.unwrap();
            println!(
                "{delta:<6} {name:<7} {:>3}  {:>6}  {:.4}",
                result.dominant.len(),
                result.budget_used,
                loss.mean_rmse
            );
        }
    }
}
