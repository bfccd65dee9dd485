//! AFF and LS distances on the same pair, and why the shared pivot helps AFF.
//!
//! Run with: cargo run --example distance_measures

use domts::distance::lcd;
use domts::{DistanceMeasure, PairMatrix};

fn main() {
    let m = 24;
    let t: Vec<f64> = (0..m).map(|i| i as f64).collect();
    let u: Vec<f64> = t.iter().map(|x| 5.0 + (0.5 * x).sin()).collect();
    let p: Vec<f64> = t.iter().map(|x| 3.0 + (0.2 * x).cos()).collect();

    // v follows p, plus a trace of the shared column u
    let v: Vec<f64> = p.iter().zip(&u).map(|(p, u)| 2.0 * p + 0.3 * u - 1.0).collect();

    let pivot = PairMatrix::pivot(&u, &p).unwrap();
    let target = PairMatrix::target(&u, &v).unwrap();
    for measure in [DistanceMeasure::Aff, DistanceMeasure::Ls] {
        let out = lcd(measure, &pivot, &target).unwrap();
        let c = out.coefficients;
        println!(
            "{measure}: distance {:.5}, v' = {:.3} u {:+.3} p {:+.3}",
            out.distance, c.a[0][1], c.a[1][1], c.b[1]
        );
    }
}
