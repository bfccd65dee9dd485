//! The six-object toy panel: its dominance graph and what each selector keeps.
//!
//! Run with: cargo run --example toy_graph

use std::path::Path;

use domts::selection::{build_dominance_graph, PivotPolicy};
use domts::tsd::load_wide_csv;
use domts::{gsa, ssa, SolverConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_graph.csv");
    let panel = load_wide_csv(path).expect("fixture loads");
    let ids = panel.object_ids();
    let config = SolverConfig::new(0.05).with_pivot(PivotPolicy::Index(3));

    let graph = build_dominance_graph(&panel, &config).expect("graph");
    println!("edges within 5%:");
    for e in &graph.edges {
        println!("  {} -> {}  (distance {:.4})", ids[e.central], ids[e.target], e.distance);
    }

    for (name, result) in [("SSA", ssa(&panel, &config)), ("GSA", gsa(&panel, &config))] {
        let result = result.expect("selection");
        let kept: Vec<&str> = result.dominant.iter().map(|&j| ids[j].as_str()).collect();
        let assigned: Vec<String> = result
            .assignments
            .iter()
            .map(|a| format!("{}<-{}", ids[a.target], ids[a.central]))
            .collect();
        println!("{name}: keeps {kept:?}, rebuilds {assigned:?}");
    }
}
