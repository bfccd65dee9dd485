//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the crate's solvers: least squares goes through
//! modified Gram-Schmidt, dominating sets through exhaustive search.

#![allow(dead_code)]

use domts::tsd::generate_composite;
use domts::{DistanceMeasure, SyntheticSpec, TsdMatrix};

/// Residual of projecting `y` onto the span of `cols` (modified Gram-Schmidt).
pub fn projection_residual(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let mut q = c.clone();
        let scale = norm(c).max(1.0);
        for b in &basis {
            let d = dot(b, &q);
            q.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nq = norm(&q);
        if nq > 1e-10 * scale {
            basis.push(q.iter().map(|x| x / nq).collect());
        }
    }
    let mut r = y.to_vec();
    // two passes keep the residual orthogonal to working precision
    for _ in 0..2 {
        for b in &basis {
            let d = dot(b, &r);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    r
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Best relative error of `v` given `p` (and the shared `u` under AFF).
pub fn oracle_distance(measure: DistanceMeasure, u: &[f64], p: &[f64], v: &[f64]) -> f64 {
    let ones = vec![1.0; v.len()];
    let design = match measure {
        DistanceMeasure::Aff => vec![u.to_vec(), p.to_vec(), ones],
        DistanceMeasure::Ls => vec![p.to_vec(), ones],
    };
    norm(&projection_residual(&design, v)) / norm(v)
}

/// Highest-ranked column outside `{p, v}`; `p` itself when none is left.
pub fn oracle_pivot(ranking: &[usize], p: usize, v: usize) -> usize {
    ranking.iter().copied().find(|&u| u != p && u != v).unwrap_or(p)
}

/// All ordered pairs within `eps` for a first-column pivot ranking.
pub fn oracle_edges(matrix: &TsdMatrix, measure: DistanceMeasure, eps: f64) -> Vec<(usize, usize)> {
    let cols = matrix.columns();
    let n = cols.len();
    let ranking: Vec<usize> = (0..n).collect();
    let mut edges = Vec::new();
    for p in 0..n {
        for v in 0..n {
            if p == v {
                continue;
            }
            let u = oracle_pivot(&ranking, p, v);
            if oracle_distance(measure, &cols[u], &cols[p], &cols[v]) <= eps {
                edges.push((p, v));
            }
        }
    }
    edges
}

/// Size of the smallest set `P` such that every other node has an in-edge from `P`.
pub fn min_dominating_size(n: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n <= 16);
    let mut covers = vec![0u32; n];
    for (j, c) in covers.iter_mut().enumerate() {
        *c |= 1 << j;
    }
    for &(p, v) in edges {
        covers[p] |= 1 << v;
    }
    let full = (1u32 << n) - 1;
    (0u32..=full)
        .filter(|set| {
            let covered = (0..n).filter(|j| set >> j & 1 == 1).fold(0, |acc, j| acc | covers[j]);
            covered == full
        })
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let mean = (xs.len() as f64 - 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let sx = rx.iter().map(|a| (a - mean).powi(2)).sum::<f64>().sqrt();
    let sy = ry.iter().map(|b| (b - mean).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        0.0
    } else {
        cov / (sx * sy)
    }
}

/// Noise levels of the five blocks of the trend family, relative to column RMS.
pub const TREND_NOISE: [f64; 5] = [0.003, 0.015, 0.03, 0.055, 0.085];

/// Five 40-object blocks with 4 planted groups each, 10% independent columns and
/// increasing noise, so every tolerance in 1%..10% separates a different share.
pub fn trend_family(n: usize, m: usize, seed: u64) -> TsdMatrix {
    let per = n / TREND_NOISE.len();
    let specs: Vec<SyntheticSpec> = TREND_NOISE
        .iter()
        .enumerate()
        .map(|(i, &noise_level)| SyntheticSpec {
            n_objects: per,
            n_times: m,
            n_groups: 4,
            noise_level,
            independent_fraction: 0.1,
            seed: seed * 100 + i as u64,
        })
        .collect();
    generate_composite(&specs).unwrap().0
}
