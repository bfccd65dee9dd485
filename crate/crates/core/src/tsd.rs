//! The time-series panel: `m` observation times by `n` objects.
//!
//! Columns are objects (meters, users), rows are ordered timestamps. This
//! module owns CSV ingestion in wide and long layouts, per-column scaling and
//! the synthetic panel generator used by tests and benchmarks.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum TsdError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("no data rows")]
    NoDataRows,
    #[error("need at least {min} {what}, found {found}")]
    TooSmall {
        what: &'static str,
        min: usize,
        found: usize,
    },
    #[error("duplicate object id {0:?}")]
    DuplicateId(String),
    #[error("timestamps must be strictly increasing: {prev:?} then {next:?}")]
    NonMonotoneTime { prev: String, next: String },
    #[error("missing {count} cell(s); first gaps: {}", format_gaps(.gaps))]
    MissingCells {
        count: usize,
        gaps: Vec<(String, String)>,
    },
    #[error("duplicate record for time {time:?}, user {user:?} (line {line})")]
    DuplicateRecord {
        time: String,
        user: String,
        line: u64,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn format_gaps(gaps: &[(String, String)]) -> String {
    gaps.iter()
        .map(|(t, u)| format!("({t}, {u})"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, TsdError>;

/// Orders labels so that embedded digit runs compare numerically
/// (`"2:00" < "10:00"`, `"u9" < "u10"`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ai, mut bi) = (a.char_indices().peekable(), b.char_indices().peekable());
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((sa, ca)), Some((sb, cb))) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let ea = digit_run_end(a, sa);
                    let eb = digit_run_end(b, sb);
                    let da = a[sa..ea].trim_start_matches('0');
                    let db = b[sb..eb].trim_start_matches('0');
                    let ord = da.len().cmp(&db.len()).then_with(|| da.cmp(db));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    while ai.peek().is_some_and(|(i, _)| *i < ea) {
                        ai.next();
                    }
                    while bi.peek().is_some_and(|(i, _)| *i < eb) {
                        bi.next();
                    }
                } else {
                    if ca != cb {
                        return ca.cmp(&cb);
                    }
                    ai.next();
                    bi.next();
                }
            }
        }
    }
}

fn digit_run_end(s: &str, start: usize) -> usize {
    s[start..]
        .find(|c: char| !c.is_ascii_digit())
        .map_or(s.len(), |off| start + off)
}

/// An `m x n` panel of observations with object ids and time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TsdMatrix {
    values: Matrix,
    object_ids: Vec<String>,
    timestamps: Vec<String>,
    unit: String,
}

impl TsdMatrix {
    pub fn new(
        values: Matrix,
        object_ids: Vec<String>,
        timestamps: Vec<String>,
        unit: impl Into<String>,
    ) -> Result<Self> {
        if object_ids.len() != values.cols() || timestamps.len() != values.rows() {
            return Err(TsdError::Shape(format!(
                "{} ids / {} timestamps for a {}x{} matrix",
                object_ids.len(),
                timestamps.len(),
                values.rows(),
                values.cols()
            )));
        }
        if values.rows() < 2 {
            return Err(TsdError::TooSmall {
                what: "rows",
                min: 2,
                found: values.rows(),
            });
        }
        if values.cols() < 2 {
            return Err(TsdError::TooSmall {
                what: "columns",
                min: 2,
                found: values.cols(),
            });
        }
        let mut seen = HashSet::new();
        for id in &object_ids {
            if !seen.insert(id.as_str()) {
                return Err(TsdError::DuplicateId(id.clone()));
            }
        }
        for w in timestamps.windows(2) {
            if natural_cmp(&w[0], &w[1]) != Ordering::Less {
                return Err(TsdError::NonMonotoneTime {
                    prev: w[0].clone(),
                    next: w[1].clone(),
                });
            }
        }
        Ok(Self {
            values,
            object_ids,
            timestamps,
            unit: unit.into(),
        })
    }

    /// Builds a panel from column vectors, labelling rows `t0, t1, ...` when
    /// no timestamps are given.
    pub fn from_columns(
        columns: &[Vec<f64>],
        object_ids: Vec<String>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        let values = Matrix::from_columns(&refs)?;
        let timestamps =
            timestamps.unwrap_or_else(|| (0..values.rows()).map(|i| format!("t{i}")).collect());
        Self::new(values, object_ids, timestamps, "")
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    /// Number of observation times.
    pub fn m(&self) -> usize {
        self.values.rows()
    }

    /// Number of objects.
    pub fn n(&self) -> usize {
        self.values.cols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|j| self.column(j)).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.object_ids.iter().position(|x| x == id)
    }

    /// Keeps the named columns in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let cols: Vec<Vec<f64>> = indices.iter().map(|&j| self.column(j)).collect();
        let ids = indices.iter().map(|&j| self.object_ids[j].clone()).collect();
        Ok(Self::from_columns(&cols, ids, Some(self.timestamps.clone()))?.with_unit(&self.unit))
    }

    /// Places `other`'s columns to the right of `self`'s. Time labels are taken from `self`.
    pub fn hstack(&self, other: &TsdMatrix) -> Result<Self> {
        if self.m() != other.m() {
            return Err(TsdError::Shape(format!(
                "cannot stack {} rows next to {}",
                other.m(),
                self.m()
            )));
        }
        let mut cols = self.columns();
        cols.extend(other.columns());
        let mut ids = self.object_ids.clone();
        ids.extend(other.object_ids.iter().cloned());
        Ok(Self::from_columns(&cols, ids, Some(self.timestamps.clone()))?.with_unit(&self.unit))
    }

    pub fn write_wide_csv<W: Write>(&self, writer: W) -> Result<()> {
        let cols = self.columns();
        write_wide(writer, &self.timestamps, &self.object_ids, &cols)
    }

    pub fn save_wide_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        self.write_wide_csv(file)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> TsdError {
    TsdError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(e: csv::Error) -> TsdError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => TsdError::Io {
            path: "<stream>".into(),
            source,
        },
        kind => TsdError::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes a wide table: `time,<id1>,...` then one row per timestamp.
///
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_wide<W: Write>(
    writer: W,
    timestamps: &[String],
    ids: &[String],
    columns: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string()];
    header.extend(ids.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, t) in timestamps.iter().enumerate() {
        let mut rec = vec![t.clone()];
        rec.extend(columns.iter().map(|c| format_float(c[i])));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| TsdError::Io {
        path: "<stream>".into(),
        source: e,
    })?;
    Ok(())
}

pub(crate) fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn parse_cell(s: &str, line: u64, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| TsdError::Parse {
        line,
        message: format!("non-numeric {what} {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(TsdError::Parse {
            line,
            message: format!("non-finite {what} {s:?}"),
        });
    }
    Ok(v)
}

/// Labelled columns sharing one time axis, without the panel's size limits.
///
/// Used for stored dominant columns and reconstructed targets, where a single
/// column (or none) is legitimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSet {
    pub timestamps: Vec<String>,
    pub ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub unit: String,
}

impl ColumnSet {
    pub fn from_matrix(matrix: &TsdMatrix, indices: &[usize]) -> Self {
        Self {
            timestamps: matrix.timestamps.clone(),
            ids: indices.iter().map(|&j| matrix.object_ids[j].clone()).collect(),
            columns: indices.iter().map(|&j| matrix.column(j)).collect(),
            unit: matrix.unit.clone(),
        }
    }

    pub fn column(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|x| x == id).map(|j| self.columns[j].as_slice())
    }

    pub fn write_wide_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_wide(writer, &self.timestamps, &self.ids, &self.columns)
    }

    pub fn save_wide_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        self.write_wide_csv(file)
    }

    pub fn into_matrix(self) -> Result<TsdMatrix> {
        Ok(TsdMatrix::from_columns(&self.columns, self.ids, Some(self.timestamps))?.with_unit(self.unit))
    }
}

/// Reads a wide table with at least one row; zero object columns is allowed.
pub fn read_column_set<R: Read>(reader: R) -> Result<ColumnSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(TsdError::NoDataRows),
    };
    // A time-only header is a valid empty set (e.g. a reconstruction with no targets).
    let ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for id in &ids {
        if !seen.insert(id.as_str()) {
            return Err(TsdError::DuplicateId(id.clone()));
        }
    }
    let n = ids.len();
    let mut timestamps: Vec<String> = Vec::new();
    let mut columns = vec![Vec::new(); n];
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != n + 1 {
            return Err(TsdError::Parse {
                line,
                message: format!("expected {} fields, found {}", n + 1, rec.len()),
            });
        }
        let t = rec[0].trim().to_string();
        if let Some(prev) = timestamps.last() {
            if natural_cmp(prev, &t) != Ordering::Less {
                return Err(TsdError::Parse {
                    line,
                    message: format!("timestamp {t:?} does not follow {prev:?}"),
                });
            }
        }
        timestamps.push(t);
        for (col, cell) in columns.iter_mut().zip(rec.iter().skip(1)) {
            col.push(parse_cell(cell, line, "value")?);
        }
    }
    if timestamps.is_empty() {
        return Err(TsdError::NoDataRows);
    }
    Ok(ColumnSet {
        timestamps,
        ids,
        columns,
        unit: String::new(),
    })
}

pub fn load_column_set(path: impl AsRef<Path>) -> Result<ColumnSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_column_set(file)
}

/// Reads a wide table from any reader.
pub fn read_wide_csv<R: Read>(reader: R) -> Result<TsdMatrix> {
    let set = read_column_set(reader)?;
    if set.ids.len() < 2 {
        return Err(TsdError::TooSmall {
            what: "object columns",
            min: 2,
            found: set.ids.len(),
        });
    }
    if set.timestamps.len() < 2 {
        return Err(TsdError::TooSmall {
            what: "rows",
            min: 2,
            found: set.timestamps.len(),
        });
    }
    set.into_matrix()
}

/// Loads a wide CSV file (`time,<id1>,...,<idn>`).
pub fn load_wide_csv(path: impl AsRef<Path>) -> Result<TsdMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_wide_csv(file)
}

/// Reads record-per-row data (`time,user_id,consumption`) and pivots it.
///
/// Rows and columns are ordered by [`natural_cmp`] on their labels, so the
/// input order of the records never matters. Gaps are an error.
pub fn read_long_csv<R: Read>(reader: R) -> Result<TsdMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| TsdError::Parse {
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (ti, ui, ci) = (find("time")?, find("user_id")?, find("consumption")?);

    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut times = Vec::new();
    let mut users = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| {
            rec.get(i).map(str::trim).ok_or_else(|| TsdError::Parse {
                line,
                message: format!("expected at least {} fields", i + 1),
            })
        };
        let (t, u) = (get(ti)?.to_string(), get(ui)?.to_string());
        let v = parse_cell(get(ci)?, line, "consumption")?;
        if cells.insert((t.clone(), u.clone()), v).is_some() {
            return Err(TsdError::DuplicateRecord {
                time: t,
                user: u,
                line,
            });
        }
        times.push(t);
        users.push(u);
    }
    if cells.is_empty() {
        return Err(TsdError::NoDataRows);
    }
    let sort_unique = |mut v: Vec<String>| {
        v.sort_by(|a, b| natural_cmp(a, b));
        v.dedup();
        v
    };
    let times = sort_unique(times);
    let users = sort_unique(users);

    let mut data = Vec::with_capacity(times.len() * users.len());
    let mut gaps = Vec::new();
    let mut missing = 0;
    for t in &times {
        for u in &users {
            match cells.get(&(t.clone(), u.clone())) {
                Some(v) => data.push(*v),
                None => {
                    missing += 1;
                    if gaps.len() < 10 {
                        gaps.push((t.clone(), u.clone()));
                    }
                    data.push(0.0);
                }
            }
        }
    }
    if missing > 0 {
        return Err(TsdError::MissingCells {
            count: missing,
            gaps,
        });
    }
    if times.len() < 2 {
        return Err(TsdError::TooSmall {
            what: "rows",
            min: 2,
            found: times.len(),
        });
    }
    if users.len() < 2 {
        return Err(TsdError::TooSmall {
            what: "columns",
            min: 2,
            found: users.len(),
        });
    }
    let values = Matrix::new(times.len(), users.len(), data)?;
    TsdMatrix::new(values, users, times, "")
}

/// Loads a long CSV file (`time,user_id,consumption`).
pub fn load_long_csv(path: impl AsRef<Path>) -> Result<TsdMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_long_csv(file)
}

/// Loads either layout, choosing long format when the header is exactly
/// `time,user_id,consumption`.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TsdMatrix> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_err(path, e))?;
    let header: Vec<String> = text
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header == ["time", "user_id", "consumption"] {
        read_long_csv(text.as_bytes())
    } else {
        read_wide_csv(text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    None,
    #[default]
    PerColumnScale,
}

/// How a panel was scaled, so that the scaling can be undone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationInfo {
    pub mode: NormalizationMode,
    /// One positive scale per column (the column's Euclidean norm, or 1).
    pub scales: Vec<f64>,
    /// Columns whose norm was zero and were left untouched.
    pub constant: Vec<bool>,
}

impl NormalizationInfo {
    pub fn identity(n: usize) -> Self {
        Self {
            mode: NormalizationMode::None,
            scales: vec![1.0; n],
            constant: vec![false; n],
        }
    }
}

/// Divides every column by its Euclidean norm; zero columns are kept and flagged.
pub fn normalize(matrix: &TsdMatrix, mode: NormalizationMode) -> (TsdMatrix, NormalizationInfo) {
    let n = matrix.n();
    match mode {
        NormalizationMode::None => (matrix.clone(), NormalizationInfo::identity(n)),
        NormalizationMode::PerColumnScale => {
            let mut scales = Vec::with_capacity(n);
            let mut constant = Vec::with_capacity(n);
            let mut values = matrix.values.clone();
            for j in 0..n {
                let norm = matrix.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for i in 0..matrix.m() {
                        values[(i, j)] /= norm;
                    }
                    scales.push(norm);
                    constant.push(false);
                } else {
                    scales.push(1.0);
                    constant.push(true);
                }
            }
            let out = TsdMatrix {
                values,
                ..matrix.clone()
            };
            (
                out,
                NormalizationInfo {
                    mode,
                    scales,
                    constant,
                },
            )
        }
    }
}

/// Inverse of [`normalize`].
pub fn denormalize(matrix: &TsdMatrix, info: &NormalizationInfo) -> Result<TsdMatrix> {
    if info.scales.len() != matrix.n() {
        return Err(TsdError::Shape(format!(
            "{} scales for {} columns",
            info.scales.len(),
            matrix.n()
        )));
    }
    let mut values = matrix.values.clone();
    for j in 0..matrix.n() {
        for i in 0..matrix.m() {
            values[(i, j)] *= info.scales[j];
        }
    }
    Ok(TsdMatrix {
        values,
        ..matrix.clone()
    })
}

/// Parameters of the synthetic panel generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_objects: usize,
    pub n_times: usize,
    pub n_groups: usize,
    /// Noise standard deviation relative to each column's RMS.
    pub noise_level: f64,
    pub independent_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TsdError::InvalidSpec(msg));
        if self.n_objects < 1 || self.n_times < 1 || self.n_groups < 1 {
            return bad("n_objects, n_times and n_groups must all be at least 1".into());
        }
        if self.n_groups > self.n_objects {
            return bad(format!(
                "n_groups ({}) exceeds n_objects ({})",
                self.n_groups, self.n_objects
            ));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return bad(format!("noise_level {} must be >= 0", self.noise_level));
        }
        if !(0.0..=1.0).contains(&self.independent_fraction) {
            return bad(format!(
                "independent_fraction {} must lie in [0, 1]",
                self.independent_fraction
            ));
        }
        Ok(())
    }
}

/// Ground truth of a synthetic panel: the planted group of every object,
/// `None` for independent columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedGroups {
    pub object_ids: Vec<String>,
    pub groups: Vec<Option<usize>>,
    /// Affine map `(a, b)` from the group base to each member.
    pub maps: Vec<Option<(f64, f64)>>,
}

const BASE_RANGE: std::ops::Range<f64> = 1.0..10.0;

/// Draws a panel with planted affine groups.
///
/// Each group has a base series with i.i.d. `U(1, 10)` readings. A member is
/// `a * base + b + noise` with `a ~ U(0.5, 2)`, `b ~ U(-1, 1)` and Gaussian
/// noise whose deviation is `noise_level` times the clean column's RMS.
/// Group sizes are uneven: the first `n_groups` grouped objects seed one group
/// each, the rest pick a group with random weights. Object order is shuffled.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(TsdMatrix, PlantedGroups)> {
    spec.validate()?;
    if spec.n_objects < 2 || spec.n_times < 2 {
        return Err(TsdError::InvalidSpec(
            "a panel needs at least 2 objects and 2 times".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, m) = (spec.n_objects, spec.n_times);
    let n_indep = ((spec.independent_fraction * n as f64).round() as usize).min(n);
    let n_grouped = n - n_indep;
    let groups = spec.n_groups.min(n_grouped.max(1));

    let bases: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..m).map(|_| rng.random_range(BASE_RANGE)).collect())
        .collect();
    let weights: Vec<f64> = (0..groups).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();

    let mut labels: Vec<Option<usize>> = Vec::with_capacity(n);
    for k in 0..n_grouped {
        if k < groups {
            labels.push(Some(k));
        } else {
            let mut x = rng.random_range(0.0..total);
            let mut g = groups - 1;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    g = i;
                    break;
                }
                x -= w;
            }
            labels.push(Some(g));
        }
    }
    labels.extend(std::iter::repeat_n(None, n_indep));
    // Fisher-Yates with our own rng keeps the order reproducible
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }

    let mut columns = Vec::with_capacity(n);
    let mut maps = Vec::with_capacity(n);
    for label in &labels {
        match label {
            Some(g) => {
                let a = rng.random_range(0.5..2.0);
                let b = rng.random_range(-1.0..1.0);
                let clean: Vec<f64> = bases[*g].iter().map(|x| a * x + b).collect();
                let rms = (clean.iter().map(|x| x * x).sum::<f64>() / m as f64).sqrt();
                let sd = spec.noise_level * rms;
                let col = if sd > 0.0 {
                    let noise = Normal::new(0.0, sd).expect("finite positive deviation");
                    clean.iter().map(|x| x + noise.sample(&mut rng)).collect()
                } else {
                    clean
                };
                columns.push(col);
                maps.push(Some((a, b)));
            }
            None => {
                columns.push((0..m).map(|_| rng.random_range(BASE_RANGE)).collect());
                maps.push(None);
            }
        }
    }
    let width = (n - 1).to_string().len();
    let ids: Vec<String> = (0..n).map(|j| format!("obj{j:0width$}")).collect();
    let times: Vec<String> = (0..m).map(|i| format!("t{i:0w$}", w = (m - 1).to_string().len())).collect();
    let matrix = TsdMatrix::from_columns(&columns, ids.clone(), Some(times))?.with_unit("kWh");
    Ok((
        matrix,
        PlantedGroups {
            object_ids: ids,
            groups: labels,
            maps,
        },
    ))
}

/// Generates several specs and places them side by side, relabelling the
/// objects `s<k>_obj<j>` and offsetting group ids so they stay distinct.
pub fn generate_composite(specs: &[SyntheticSpec]) -> Result<(TsdMatrix, PlantedGroups)> {
    let Some(first) = specs.first() else {
        return Err(TsdError::InvalidSpec("empty spec list".into()));
    };
    if specs.len() == 1 {
        return generate_synthetic(first);
    }
    let mut columns = Vec::new();
    let mut ids = Vec::new();
    let mut groups = Vec::new();
    let mut maps = Vec::new();
    let mut offset = 0;
    let mut times = None;
    for (k, spec) in specs.iter().enumerate() {
        if spec.n_times != first.n_times {
            return Err(TsdError::InvalidSpec(
                "all specs of a composite panel need the same n_times".into(),
            ));
        }
        let (mat, truth) = generate_synthetic(spec)?;
        times.get_or_insert_with(|| mat.timestamps().to_vec());
        columns.extend(mat.columns());
        ids.extend(truth.object_ids.iter().map(|id| format!("s{k}_{id}")));
        groups.extend(truth.groups.iter().map(|g| g.map(|g| g + offset)));
        maps.extend(truth.maps.iter().copied());
        offset += spec.n_groups;
    }
    let matrix = TsdMatrix::from_columns(&columns, ids.clone(), times)?.with_unit("kWh");
    Ok((
        matrix,
        PlantedGroups {
            object_ids: ids,
            groups,
            maps,
        },
    ))
}
