//! Loading, reconstruction, storage accounting and the sweep harness.

mod common;

use std::io::Cursor;

use common::{norm, oracle_distance, oracle_pivot, projection_residual, trend_family};
use domts::bench::{emit_tables, median, read_rows_csv, run_sweep, summary_tables, SweepSpec, TableFormat, REPORT_SCHEMA};
use domts::reconstruct::{evaluate_reconstruction, reconstruct_targets, storage_savings, ReconstructError};
use domts::selection::{select, Algorithm};
use domts::tsd::{generate_synthetic, load_wide_csv, read_long_csv, read_wide_csv, ColumnSet};
use domts::{DistanceMeasure, SolverConfig, SyntheticSpec, TsdMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(n: usize, m: usize, groups: usize, noise: f64, indep: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_objects: n,
        n_times: m,
        n_groups: groups,
        noise_level: noise,
        independent_fraction: indep,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wide_csv_roundtrip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 3), 2..12)) {
        let cols: Vec<Vec<f64>> = (0..3).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let data = TsdMatrix::from_columns(&cols, vec!["a".into(), "b".into(), "c".into()], None).unwrap();
        let mut buf = Vec::new();
        data.write_wide_csv(&mut buf).unwrap();
        let back = read_wide_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.object_ids(), data.object_ids());
        prop_assert_eq!(back.timestamps(), data.timestamps());
        for (x, y) in back.values().data().iter().zip(data.values().data()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn long_record_order_is_irrelevant(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        let mut records: Vec<String> = Vec::new();
        for t in 0..m {
            for u in 0..n {
                records.push(format!("{t}:00,meter{u},{}", (t * 7 + u * 3) as f64 / 4.0));
            }
        }
        let sorted = format!("time,user_id,consumption\n{}\n", records.join("\n"));
        records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = format!("time,user_id,consumption\n{}\n", records.join("\n"));
        let a = read_long_csv(Cursor::new(sorted)).map(|x| x.values().clone());
        let b = read_long_csv(Cursor::new(shuffled)).map(|x| x.values().clone());
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn reconstruction_keeps_the_contract(seed in any::<u64>(), n in 3usize..25, eps in 0.01f64..0.15, delta in 0.0f64..0.2, algorithm in prop_oneof![Just(Algorithm::Ssa), Just(Algorithm::Gsa)]) {
        let (data, _) = generate_synthetic(&spec(n, 20, 3, 0.03, 0.2, seed)).unwrap();
        let r = select(&data, algorithm, &SolverConfig::new(eps).with_delta(delta)).unwrap();
        let report = evaluate_reconstruction(&data, &r).unwrap();
        for t in &report.target_errors {
            if !t.budgeted {
                prop_assert!(t.relative_error <= eps + 1e-12, "{} {}", t.id, t.relative_error);
            }
        }
        prop_assert!(report.violation_fraction <= delta + 1e-12);
        // decompression sees only the stored columns
        let stored = ColumnSet::from_matrix(&data, &r.stored_columns());
        prop_assert_eq!(reconstruct_targets(&stored, &r).unwrap(), report.reconstructed);
    }
}

#[test]
fn zero_noise_members_are_exact_affine_images() {
    let (data, truth) = generate_synthetic(&spec(6, 8, 2, 0.0, 0.0, 1)).unwrap();
    assert_eq!((data.m(), data.n()), (8, 6));
    let cols = data.columns();
    for (j, g) in truth.groups.iter().enumerate() {
        let base = truth.groups.iter().position(|h| h == g).unwrap();
        let r = projection_residual(&[cols[base].clone(), vec![1.0; 8]], &cols[j]);
        assert!(norm(&r) <= 1e-9 * norm(&cols[j]), "column {j}");
    }
}

#[test]
fn light_noise_keeps_members_close() {
    // the base series is not stored, so each member is compared with the
    // first member of its group; the pair carries noise on both sides
    let (data, truth) = generate_synthetic(&spec(60, 40, 4, 0.01, 0.0, 3)).unwrap();
    let cols = data.columns();
    let ranking: Vec<usize> = (0..data.n()).collect();
    let (mut close, mut total) = (0, 0);
    for (j, g) in truth.groups.iter().enumerate() {
        let reference = truth.groups.iter().position(|h| h == g).unwrap();
        if reference == j {
            continue;
        }
        let u = oracle_pivot(&ranking, reference, j);
        close += usize::from(oracle_distance(DistanceMeasure::Aff, &cols[u], &cols[reference], &cols[j]) <= 0.05);
        total += 1;
    }
    assert!(close as f64 >= 0.95 * total as f64, "{close}/{total}");
}

#[test]
fn zero_noise_reconstruction_is_exact() {
    for seed in 0..5 {
        let (data, _) = generate_synthetic(&spec(30, 20, 3, 0.0, 0.0, seed)).unwrap();
        for measure in [DistanceMeasure::Aff, DistanceMeasure::Ls] {
            let r = select(&data, Algorithm::Gsa, &SolverConfig::new(0.01).with_measure(measure)).unwrap();
            let report = evaluate_reconstruction(&data, &r).unwrap();
            assert!(report.target_errors.iter().all(|t| t.relative_error <= 1e-9));
        }
    }
}

#[test]
fn adversarial_budget_stays_within_delta() {
    for seed in 0..5 {
        let (data, _) = generate_synthetic(&spec(50, 30, 5, 0.0, 0.8, seed)).unwrap();
        for algorithm in [Algorithm::Ssa, Algorithm::Gsa] {
            let r = select(&data, algorithm, &SolverConfig::new(0.01).with_delta(0.1)).unwrap();
            let report = evaluate_reconstruction(&data, &r).unwrap();
            assert!(r.budget_used > 0);
            assert!(report.violation_fraction <= 0.1, "{algorithm}: {}", report.violation_fraction);
        }
    }
}

#[test]
fn missing_coefficients_name_the_targets() {
    let (data, _) = generate_synthetic(&spec(12, 10, 2, 0.0, 0.0, 4)).unwrap();
    let mut r = select(&data, Algorithm::Gsa, &SolverConfig::new(0.01)).unwrap();
    let dropped = r.assignments.remove(0);
    let stored = ColumnSet::from_matrix(&data, &r.stored_columns());
    match reconstruct_targets(&stored, &r) {
        Err(ReconstructError::MissingCoefficients(ids)) => assert_eq!(ids, [data.object_ids()[dropped.target].clone()]),
        other => panic!("expected missing coefficients, got {other:?}"),
    }
}

#[test]
fn storage_arithmetic() {
    let (data, _) = generate_synthetic(&spec(30, 20, 3, 0.0, 0.0, 2)).unwrap();
    let r = select(&data, Algorithm::Gsa, &SolverConfig::new(0.01)).unwrap();
    let s = storage_savings(&r, data.m());
    let (n, m, p) = (30, 20, r.dominant.len());
    let hand = m * p + 6 * (n - p) + m * r.extra_pivots().len();
    assert_eq!(s.stored_cells, hand);
    assert_eq!(s.raw_cells, m * n);
    assert!((s.ratio - hand as f64 / (m * n) as f64).abs() < 1e-15);

    // nothing reduced: ratio exactly 1
    let indep = SyntheticSpec { independent_fraction: 1.0, ..spec(8, 40, 1, 0.0, 0.0, 9) };
    let (data, _) = generate_synthetic(&indep).unwrap();
    let r = select(&data, Algorithm::Ssa, &SolverConfig::new(0.01)).unwrap();
    assert_eq!(r.dominant.len(), 8);
    assert_eq!(storage_savings(&r, 40).ratio, 1.0);

    // one central for n identical columns: m + 6(n-1), plus the pivot column
    let col: Vec<f64> = (0..200).map(|i| 2.0 + (i as f64 * 0.1).sin()).collect();
    let data = TsdMatrix::from_columns(&vec![col; 10], (0..10).map(|j| format!("c{j}")).collect(), None).unwrap();
    let r = select(&data, Algorithm::Ssa, &SolverConfig::new(0.01)).unwrap();
    let s = storage_savings(&r, 200);
    assert_eq!(r.dominant.len(), 1);
    assert_eq!(s.central_cells + s.coefficient_cells, 200 + 6 * 9);
    assert!(s.ratio <= (200.0 + 54.0 + 200.0) / 2000.0 + 1e-15);
}

const SWEEP: &str = r#"{
  "methods": ["SSA_AFF", "SSA_LS", "GSA_AFF", "GSA_LS"],
  "epsilons": [0.01, 0.03, 0.05, 0.08, 0.1],
  "deltas": [0.0],
  "datasets": [{"name": "planted", "synthetic": [
    {"n_objects": 30, "n_times": 20, "n_groups": 3, "noise_level": 0.02, "independent_fraction": 0.1, "seed": 0}
  ]}],
  "repetitions": 2,
  "seed": 5
}"#;

#[test]
fn sweep_rows_tables_and_schema() {
    let spec = SweepSpec::from_json(SWEEP).unwrap();
    let report = run_sweep(&spec, Some(2)).unwrap();
    assert_eq!(report.rows.len(), 4 * 5 * 2);
    assert!(report.rows.iter().all(|r| r.ok()));
    for row in report.rows.iter().filter(|r| r.method.to_string().starts_with("GSA")) {
        assert!(row.target_counts.windows(2).all(|w| w[1] <= w[0]));
        assert!(row.sorted_target_counts().windows(2).all(|w| w[1] <= w[0]));
    }

    // the same cells on one thread, apart from timing
    let single = run_sweep(&spec, Some(1)).unwrap();
    let strip = |rows: &[domts::bench::SweepRow]| {
        rows.iter().map(|r| domts::bench::SweepRow { wall_time_seconds: 0.0, ..r.clone() }).collect::<Vec<_>>()
    };
    assert_eq!(strip(&single.rows), strip(&report.rows));

    let tables = summary_tables(&report);
    let eps_table = &tables["dsn_ratio"][0];
    let md = eps_table.to_markdown();
    let body: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).skip(2).collect();
    assert_eq!(body.len(), 5, "{md}");
    assert!(body.iter().all(|l| l.matches('|').count() == 6));

    let dir = tempfile::tempdir().unwrap();
    emit_tables(&report, TableFormat::Csv, dir.path()).unwrap();
    let rows = read_rows_csv(std::fs::File::open(dir.path().join("rows.csv")).unwrap()).unwrap();
    assert_eq!(rows, report.rows);

    let written = emit_tables(&report, TableFormat::Json, dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&written[0]).unwrap()).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&json), "{:?}", validator.iter_errors(&json).map(|e| e.to_string()).collect::<Vec<_>>());
    let mut broken = json.clone();
    broken["rows"][0]["surprise"] = serde_json::json!(1);
    assert!(!validator.is_valid(&broken));
    broken = json;
    broken["rows"][0]["dsn_ratio"] = serde_json::json!("high");
    assert!(!validator.is_valid(&broken));
}

#[test]
fn greedy_needs_no_more_centrals_than_scanning() {
    let (mut gsa, mut ssa) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let data = trend_family(100, 30, 300 + seed);
        gsa.push(select(&data, Algorithm::Gsa, &SolverConfig::new(0.05)).unwrap().dsn_ratio);
        ssa.push(select(&data, Algorithm::Ssa, &SolverConfig::new(0.05)).unwrap().dsn_ratio);
    }
    assert!(median(&gsa) <= median(&ssa), "{} vs {}", median(&gsa), median(&ssa));
}

#[test]
fn epsilon_trends_on_planted_data() {
    let eps = [0.01, 0.03, 0.05, 0.08, 0.1];
    let (mut dsn_ok, mut rmse_ok, mut total) = (0, 0, 0);
    for seed in 0..20 {
        let data = trend_family(100, 30, 500 + seed);
        let runs: Vec<(f64, f64)> = eps
            .iter()
            .map(|&e| {
                let r = select(&data, Algorithm::Gsa, &SolverConfig::new(e)).unwrap();
                (r.dsn_ratio, evaluate_reconstruction(&data, &r).unwrap().loss.unwrap().mean_rmse)
            })
            .collect();
        dsn_ok += usize::from(runs.windows(2).all(|w| w[1].0 <= w[0].0));
        rmse_ok += usize::from(runs.windows(2).all(|w| w[1].1 >= w[0].1));
        total += 1;
    }
    assert!(dsn_ok as f64 >= 0.9 * total as f64, "dsn monotone on {dsn_ok}/{total}");
    assert!(rmse_ok as f64 >= 0.9 * total as f64, "rmse monotone on {rmse_ok}/{total}");
}

#[test]
fn fixture_loads_as_wide_table() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_graph.csv");
    let data = load_wide_csv(path).unwrap();
    assert_eq!((data.m(), data.n()), (24, 6));
}
