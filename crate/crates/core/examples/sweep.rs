//! A small parameter sweep over synthetic data, summarised as Markdown.
//!
//! Run with: cargo run --example sweep

use domts::bench::{run_sweep, summary_tables, SweepSpec};

const SPEC: &str = r#"{
  "methods": ["SSA_AFF", "SSA_LS", "GSA_AFF", "GSA_LS"],
  "epsilons": [0.02, 0.05, 0.1],
  "deltas": [0.0, 0.05],
  "datasets": [
    {"name": "mixed", "synthetic": [
      {"n_objects": 40, "n_times": 30, "n_groups": 4, "noise_level": 0.01, "independent_fraction": 0.1, "seed": 1},
      {"n_objects": 40, "n_times": 30, "n_groups": 4, "noise_level": 0.05, "independent_fraction": 0.1, "seed": 2}
    ]}
  ],
  "repetitions": 3,
  "seed": 0
}"#;

fn main() {
    let spec = SweepSpec::from_json(SPEC).expect("valid sweep");
    let report = run_sweep(&spec, None).expect("sweep runs");
    println!("{} cells", report.rows.len());
    for (metric, tables) in summary_tables(&report) {
        println!("\n## {metric}");
        for table in tables {
            println!("{}", table.to_markdown());
        }
    }
}
