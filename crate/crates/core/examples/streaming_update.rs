//! Keep a fitted transform current as new rows arrive, without refitting.
//!
//! Run with: cargo run --example streaming_update

use domts::affine::{init_transform, relative_difference};
use domts::linalg::{solve_least_squares, Matrix};

fn main() {
    // three stored series (plus the ones column) predicting two others
    let row = |t: f64| {
        let design = vec![t.sin() + 2.0, (0.3 * t).cos(), 0.1 * t, 1.0];
        let response = vec![
            1.5 * design[0] - 0.5 * design[2] + 0.2 + 0.01 * (7.0 * t).sin(),
            0.8 * design[1] + 0.3 * design[0] - 1.0,
        ];
        (design, response)
    };
    let (designs, responses): (Vec<_>, Vec<_>) = (0..40).map(|i| row(i as f64)).unzip();

    let warm = 6;
    let mut state = init_transform(
        &Matrix::from_rows(&designs[..warm]).unwrap(),
        &Matrix::from_rows(&responses[..warm]).unwrap(),
    )
    .expect("warm-up window has full rank");

    for (x, y) in designs.iter().zip(&responses).skip(warm) {
        state = state.stream_append(x, y).expect("finite row");
    }

    let batch = solve_least_squares(
        &Matrix::from_rows(&designs).unwrap(),
        &Matrix::from_rows(&responses).unwrap(),
        0.0,
    )
    .unwrap();
    println!("rows folded in: {}", state.rows_seen());
    println!("streamed R:\n{:?}", state.r());
    println!(
        "relative difference to a batch refit: {:.2e}",
        relative_difference(state.r(), &batch.coefficients)
    );
}
