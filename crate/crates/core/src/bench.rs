//! Sweep harness: run every (method, epsilon, delta, dataset, repetition)
//! cell end to end and tabulate the outcome.
//!
//! A cell normalises, selects, reconstructs and scores. Cells run in
//! parallel, a failing cell is recorded in its row, and rows come back in
//! cell order whatever the thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::DistanceMeasure;
use crate::reconstruct::evaluate_reconstruction;
use crate::selection::{select, Algorithm, BudgetRule, PivotPolicy, SolverConfig};
use crate::tsd::{format_float, generate_composite, load_csv, SyntheticSpec, TsdError, TsdMatrix};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("dataset {name:?}: {source}")]
    Dataset {
        name: String,
        #[source]
        source: TsdError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad rows file: {0}")]
    Rows(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// An algorithm paired with a distance measure, written `GSA_AFF` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub algorithm: Algorithm,
    pub measure: DistanceMeasure,
}

impl Method {
    pub const fn new(algorithm: Algorithm, measure: DistanceMeasure) -> Self {
        Self { algorithm, measure }
    }

    /// The four combinations in table column order.
    pub const ALL: [Method; 4] = [
        Method::new(Algorithm::Ssa, DistanceMeasure::Aff),
        Method::new(Algorithm::Ssa, DistanceMeasure::Ls),
        Method::new(Algorithm::Gsa, DistanceMeasure::Aff),
        Method::new(Algorithm::Gsa, DistanceMeasure::Ls),
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.algorithm, self.measure)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, m) = s
            .split_once('_')
            .ok_or_else(|| format!("method {s:?} should look like GSA_AFF"))?;
        Ok(Self::new(a.parse()?, m.parse()?))
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Wide or long CSV, reused for every repetition.
    File(PathBuf),
    /// Specs generated side by side; repetition `r` adds `seed + r` to every spec seed.
    Synthetic(Vec<SyntheticSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub datasets: Vec<DatasetSpec>,
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default)]
    pub pivot_policy: PivotPolicy,
    #[serde(default)]
    pub budget_rule: BudgetRule,
    #[serde(default)]
    pub prefilter: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::InvalidSpec(m.into()));
        if self.methods.is_empty() {
            return bad("methods is empty");
        }
        if self.epsilons.is_empty() {
            return bad("epsilons is empty");
        }
        if self.deltas.is_empty() {
            return bad("deltas is empty");
        }
        if self.datasets.is_empty() {
            return bad("datasets is empty");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        for d in &self.datasets {
            if let DatasetSource::Synthetic(specs) = &d.source {
                if specs.is_empty() {
                    return Err(BenchError::InvalidSpec(format!("dataset {:?} has no specs", d.name)));
                }
                for s in specs {
                    s.validate().map_err(|source| BenchError::Dataset {
                        name: d.name.clone(),
                        source,
                    })?;
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// One cell's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub dataset: String,
    pub repetition: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub m: usize,
    pub dominant_size: usize,
    pub dsn_ratio: f64,
    /// Mean over all columns of the per-column RMSE, in original units.
    pub mean_rmse: f64,
    pub wall_time_seconds: f64,
    pub budget_used: usize,
    pub violation_fraction: f64,
    /// Targets per central in selection order.
    pub target_counts: Vec<usize>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn sorted_target_counts(&self) -> Vec<usize> {
        let mut c = self.target_counts.clone();
        c.sort_unstable_by(|a, b| b.cmp(a));
        c
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

fn dataset_for(d: &DatasetSpec, seed: u64, rep: usize) -> std::result::Result<TsdMatrix, TsdError> {
    match &d.source {
        DatasetSource::File(path) => load_csv(path),
        DatasetSource::Synthetic(specs) => {
            let shifted: Vec<SyntheticSpec> = specs
                .iter()
                .map(|s| SyntheticSpec {
                    seed: s.seed.wrapping_add(seed).wrapping_add(rep as u64),
                    ..s.clone()
                })
                .collect();
            Ok(generate_composite(&shifted)?.0)
        }
    }
}

fn run_cell(spec: &SweepSpec, data: &TsdMatrix, dataset: &str, rep: usize, method: Method, eps: f64, delta: f64) -> SweepRow {
    let mut row = SweepRow {
        method,
        dataset: dataset.to_string(),
        repetition: rep,
        epsilon: eps,
        delta,
        n: data.n(),
        m: data.m(),
        dominant_size: 0,
        dsn_ratio: 0.0,
        mean_rmse: 0.0,
        wall_time_seconds: 0.0,
        budget_used: 0,
        violation_fraction: 0.0,
        target_counts: Vec::new(),
        error: None,
    };
    let config = SolverConfig {
        epsilon: eps,
        delta,
        measure: method.measure,
        pivot_policy: spec.pivot_policy,
        budget_rule: spec.budget_rule,
        prefilter: spec.prefilter,
        ..SolverConfig::default()
    };
    let started = Instant::now();
    let result = match select(data, method.algorithm, &config) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.wall_time_seconds = started.elapsed().as_secs_f64();
    row.dominant_size = result.dominant.len();
    row.dsn_ratio = result.dsn_ratio;
    row.budget_used = result.budget_used;
    row.target_counts = result.target_counts();
    match evaluate_reconstruction(data, &result) {
        Ok(rep) => {
            row.mean_rmse = rep.loss.map_or(0.0, |l| l.mean_rmse);
            row.violation_fraction = rep.violation_fraction;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every cell. `threads` limits the pool; `None` uses rayon's default.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepReport> {
    spec.validate()?;
    let work = || -> Vec<SweepRow> {
        // datasets are built once per (dataset, repetition) and shared by its cells
        let data: Vec<(usize, usize, std::result::Result<TsdMatrix, TsdError>)> = spec
            .datasets
            .iter()
            .enumerate()
            .flat_map(|(d, _)| (0..spec.repetitions).map(move |r| (d, r)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(d, r)| (d, r, dataset_for(&spec.datasets[d], spec.seed, r)))
            .collect();
        let mut cells = Vec::new();
        for (d, r, m) in &data {
            for &method in &spec.methods {
                for &eps in &spec.epsilons {
                    for &delta in &spec.deltas {
                        cells.push((*d, *r, m, method, eps, delta));
                    }
                }
            }
        }
        cells
            .into_par_iter()
            .map(|(d, r, m, method, eps, delta)| {
                let name = &spec.datasets[d].name;
                match m {
                    Ok(data) => run_cell(spec, data, name, r, method, eps, delta),
                    Err(e) => SweepRow {
                        method,
                        dataset: name.clone(),
                        repetition: r,
                        epsilon: eps,
                        delta,
                        n: 0,
                        m: 0,
                        dominant_size: 0,
                        dsn_ratio: 0.0,
                        mean_rmse: 0.0,
                        wall_time_seconds: 0.0,
                        budget_used: 0,
                        violation_fraction: 0.0,
                        target_counts: Vec::new(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    };
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| BenchError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(SweepReport {
        spec: spec.clone(),
        rows,
    })
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// A pivoted summary: one value per (row key, method).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub title: String,
    pub row_label: String,
    pub row_keys: Vec<String>,
    pub methods: Vec<Method>,
    /// `cells[r][c]`, `None` when every repetition failed.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl SummaryTable {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("#### {}\n\n| {} |", self.title, self.row_label);
        for m in &self.methods {
            s.push_str(&format!(" {m} |"));
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(self.methods.len()));
        s.push('\n');
        for (key, row) in self.row_keys.iter().zip(&self.cells) {
            s.push_str(&format!("| {key} |"));
            for c in row {
                match c {
                    Some(v) => s.push_str(&format!(" {v:.4} |")),
                    None => s.push_str(" n/a |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    DsnRatio,
    MeanRmse,
    WallTime,
}

impl Metric {
    fn of(self, r: &SweepRow) -> f64 {
        match self {
            Self::DsnRatio => r.dsn_ratio,
            Self::MeanRmse => r.mean_rmse,
            Self::WallTime => r.wall_time_seconds,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::DsnRatio => "median dsn_ratio",
            Self::MeanRmse => "median mean RMSE",
            Self::WallTime => "median selection time (s)",
        }
    }
}

fn pct(x: f64) -> String {
    format!("{}%", format_float(x * 100.0).trim_end_matches(".0"))
}

fn pivot_table<K: PartialEq + Copy>(
    report: &SweepReport,
    metric: Metric,
    title: String,
    row_label: &str,
    keys: &[(K, String)],
    key_of: impl Fn(&SweepRow) -> K,
    keep: impl Fn(&SweepRow) -> bool,
) -> SummaryTable {
    let methods = report.spec.methods.clone();
    let cells = keys
        .iter()
        .map(|(k, _)| {
            methods
                .iter()
                .map(|m| {
                    let vals: Vec<f64> = report
                        .rows
                        .iter()
                        .filter(|r| r.ok() && r.method == *m && key_of(r) == *k && keep(r))
                        .map(|r| metric.of(r))
                        .collect();
                    (!vals.is_empty()).then(|| median(&vals))
                })
                .collect()
        })
        .collect();
    SummaryTable {
        title,
        row_label: row_label.into(),
        row_keys: keys.iter().map(|(_, s)| s.clone()).collect(),
        methods,
        cells,
    }
}

/// Epsilon sweeps (rows epsilon) per dataset and delta, delta sweeps (rows
/// delta) per dataset and epsilon, and a timing table (rows dataset).
pub fn summary_tables(report: &SweepReport) -> BTreeMap<&'static str, Vec<SummaryTable>> {
    let spec = &report.spec;
    let eps_keys: Vec<(f64, String)> = spec.epsilons.iter().map(|&e| (e, pct(e))).collect();
    let delta_keys: Vec<(f64, String)> = spec.deltas.iter().map(|&d| (d, pct(d))).collect();
    let mut out: BTreeMap<&'static str, Vec<SummaryTable>> = BTreeMap::new();
    for (file, metric) in [("dsn_ratio", Metric::DsnRatio), ("mean_rmse", Metric::MeanRmse)] {
        let mut tables = Vec::new();
        for d in &spec.datasets {
            for &delta in &spec.deltas {
                tables.push(pivot_table(
                    report,
                    metric,
                    format!("{} by epsilon ({}, delta = {})", metric.label(), d.name, pct(delta)),
                    "epsilon",
                    &eps_keys,
                    |r| r.epsilon,
                    |r| r.dataset == d.name && r.delta == delta,
                ));
            }
            if spec.deltas.len() > 1 {
                for &eps in &spec.epsilons {
                    tables.push(pivot_table(
                        report,
                        metric,
                        format!("{} by delta ({}, epsilon = {})", metric.label(), d.name, pct(eps)),
                        "delta",
                        &delta_keys,
                        |r| r.delta,
                        |r| r.dataset == d.name && r.epsilon == eps,
                    ));
                }
            }
        }
        out.insert(file, tables);
    }
    let ds_keys: Vec<(usize, String)> = spec
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| (i, d.name.clone()))
        .collect();
    let mut timing = Vec::new();
    for &eps in &spec.epsilons {
        for &delta in &spec.deltas {
            timing.push(pivot_table(
                report,
                Metric::WallTime,
                format!("{} (epsilon = {}, delta = {})", Metric::WallTime.label(), pct(eps), pct(delta)),
                "dataset",
                &ds_keys,
                |r| spec.datasets.iter().position(|d| d.name == r.dataset).unwrap_or(usize::MAX),
                |r| r.epsilon == eps && r.delta == delta,
            ));
        }
    }
    out.insert("wall_time", timing);
    out
}

const CAPTION: &str = "Synthetic desk-scale analogue: compare shapes and orderings, not absolute values.";

const ROW_HEADER: [&str; 15] = [
    "method",
    "dataset",
    "repetition",
    "epsilon",
    "delta",
    "n",
    "m",
    "dominant_size",
    "dsn_ratio",
    "mean_rmse",
    "wall_time_seconds",
    "budget_used",
    "violation_fraction",
    "target_counts",
    "error",
];

/// Writes one line per row; target counts are `;`-separated.
pub fn write_rows_csv<W: Write>(writer: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ROW_HEADER)?;
    for r in rows {
        let counts: Vec<String> = r.target_counts.iter().map(usize::to_string).collect();
        w.write_record([
            r.method.to_string(),
            r.dataset.clone(),
            r.repetition.to_string(),
            format_float(r.epsilon),
            format_float(r.delta),
            r.n.to_string(),
            r.m.to_string(),
            r.dominant_size.to_string(),
            format_float(r.dsn_ratio),
            format_float(r.mean_rmse),
            format_float(r.wall_time_seconds),
            r.budget_used.to_string(),
            format_float(r.violation_fraction),
            counts.join(";"),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| BenchError::Rows(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).ok_or_else(|| BenchError::Rows(format!("line {line}: missing field {i}")));
        fn num<T: FromStr>(s: &str, line: u64) -> Result<T> {
            s.parse()
                .map_err(|_| BenchError::Rows(format!("line {line}: bad number {s:?}")))
        }
        let counts = field(13)?;
        rows.push(SweepRow {
            method: field(0)?.parse().map_err(BenchError::Rows)?,
            dataset: field(1)?.to_string(),
            repetition: num(field(2)?, line)?,
            epsilon: num(field(3)?, line)?,
            delta: num(field(4)?, line)?,
            n: num(field(5)?, line)?,
            m: num(field(6)?, line)?,
            dominant_size: num(field(7)?, line)?,
            dsn_ratio: num(field(8)?, line)?,
            mean_rmse: num(field(9)?, line)?,
            wall_time_seconds: num(field(10)?, line)?,
            budget_used: num(field(11)?, line)?,
            violation_fraction: num(field(12)?, line)?,
            target_counts: if counts.is_empty() {
                Vec::new()
            } else {
                counts.split(';').map(|c| num(c, line)).collect::<Result<_>>()?
            },
            error: Some(field(14)?.to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn summary_csv(tables: &[SummaryTable]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| BenchError::Rows(e.to_string());
    w.write_record(["table", "key", "method", "value"]).map_err(csv_err)?;
    for t in tables {
        for (key, row) in t.row_keys.iter().zip(&t.cells) {
            for (m, v) in t.methods.iter().zip(row) {
                let v = v.map(format_float).unwrap_or_default();
                w.write_record([t.title.as_str(), key, &m.to_string(), &v]).map_err(csv_err)?;
            }
        }
    }
    w.into_inner().map_err(|e| BenchError::Rows(e.to_string()))
}

/// Writes the report in `format` under `dir`, returning the files written.
///
/// * json: `report.json`.
/// * csv: `rows.csv`, `target_counts.csv` and one summary CSV per table family.
/// * markdown: one `.md` per table family.
pub fn emit_tables(report: &SweepReport, format: TableFormat, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    match format {
        TableFormat::Json => {
            let mut text = serde_json::to_vec_pretty(report)?;
            text.push(b'\n');
            put("report.json".into(), text)?;
        }
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_rows_csv(&mut buf, &report.rows).map_err(|e| BenchError::Rows(e.to_string()))?;
            put("rows.csv".into(), buf)?;
            put("target_counts.csv".into(), target_counts_csv(report)?)?;
            for (name, tables) in summary_tables(report) {
                put(format!("{name}.csv"), summary_csv(&tables)?)?;
            }
        }
        TableFormat::Markdown => {
            for (name, tables) in summary_tables(report) {
                let mut s = format!("_{CAPTION}_\n\n");
                for t in &tables {
                    s.push_str(&t.to_markdown());
                    s.push('\n');
                }
                put(format!("{name}.md"), s.into_bytes())?;
            }
        }
    }
    Ok(written)
}

/// Descending per-central target counts, one line per (cell, rank).
fn target_counts_csv(report: &SweepReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| BenchError::Rows(e.to_string());
    w.write_record(["method", "dataset", "repetition", "epsilon", "delta", "rank", "selection_order_count", "sorted_count"])
        .map_err(e)?;
    for r in report.rows.iter().filter(|r| r.ok()) {
        for (k, (a, b)) in r.target_counts.iter().zip(r.sorted_target_counts()).enumerate() {
            w.write_record([
                r.method.to_string(),
                r.dataset.clone(),
                r.repetition.to_string(),
                format_float(r.epsilon),
                format_float(r.delta),
                (k + 1).to_string(),
                a.to_string(),
                b.to_string(),
            ])
            .map_err(e)?;
        }
    }
    w.into_inner().map_err(|e| BenchError::Rows(e.to_string()))
}

/// JSON schema shipped for `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schema/sweep_report.schema.json");
