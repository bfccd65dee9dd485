//! Long-format meter readings in, wide panel and coefficient table out.
//!
//! Run with: cargo run --example csv_io

use std::io::Cursor;

use domts::affine::{read_coefficients_csv, write_coefficients_csv, CoefficientRecord};
use domts::tsd::{normalize, read_long_csv, NormalizationMode};
use domts::{ssa, SolverConfig};

fn main() {
    let mut long = String::from("time,user_id,consumption\n");
    for h in 0..12 {
        let base = 1.0 + (h as f64 * 0.7).sin().abs();
        for (user, scale, shift) in [("m2", 2.0, 0.1), ("m10", 0.5, 0.0), ("m1", 1.0, 0.3)] {
            long += &format!("{h:02}:00,{user},{:.4}\n", scale * base + shift);
        }
        long += &format!("{h:02}:00,m3,{:.4}\n", 1.0 + ((h * h) % 7) as f64);
    }
    let panel = read_long_csv(Cursor::new(long)).expect("complete long table");
    println!("ids in natural order: {:?}", panel.object_ids());

    let mut wide = Vec::new();
    panel.write_wide_csv(&mut wide).unwrap();
    println!("{}", String::from_utf8(wide).unwrap().lines().take(3).collect::<Vec<_>>().join("\n"));

    let (_, info) = normalize(&panel, NormalizationMode::PerColumnScale);
    println!("column scales: {:?}", info.scales);

    let result = ssa(&panel, &SolverConfig::new(0.01)).expect("selection");
    let ids = panel.object_ids();
    let records: Vec<CoefficientRecord> = result
        .assignments
        .iter()
        .map(|a| CoefficientRecord::new(&ids[a.target], &ids[a.central], &a.coefficients))
        .collect();
    let mut table = Vec::new();
    write_coefficients_csv(&mut table, &records).unwrap();
    print!("{}", String::from_utf8_lossy(&table));
    assert_eq!(read_coefficients_csv(table.as_slice()).unwrap(), records);
}
