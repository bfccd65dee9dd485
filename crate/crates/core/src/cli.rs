//! The `domts` command line: `gen`, `select`, `reconstruct`, `eval`, `bench`.
//!
//! Exit codes: 0 success, 1 data or runtime error, 2 usage error. A JSON
//! object passed with `--config` supplies defaults for any flag left unset;
//! keys are the long flag names with `-` replaced by `_`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::affine::{write_coefficients_csv, CoefficientRecord};
use crate::bench::{emit_tables, run_sweep, BenchError, SweepSpec, TableFormat};
use crate::distance::{information_loss, relative_error, DistanceMeasure, LossReport};
use crate::linalg::Matrix;
use crate::reconstruct::{reconstruct_targets, ReconstructError};
use crate::selection::{select, Algorithm, BudgetRule, PivotPolicy, SelectionDocument, SelectionError, SelectionResult, SolverConfig};
use crate::tsd::{generate_synthetic, load_column_set, load_csv, ColumnSet, PlantedGroups, SyntheticSpec, TsdError};

#[derive(Debug, Parser)]
#[command(name = "domts", version, about = "Dominant-subset selection for time-series panels")]
pub struct Cli {
    /// JSON object with defaults for unset flags.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel with planted affine groups.
    Gen(GenArgs),
    /// Select the dominant set of a panel.
    Select(SelectArgs),
    /// Rebuild target columns from stored columns and a selection.
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction with the original panel.
    Eval(EvalArgs),
    /// Run a parameter sweep and write its tables.
    Bench(BenchArgs),
}

const DEFAULT_TIMES: usize = 24;
const DEFAULT_GROUPS: usize = 3;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of columns (required).
    #[arg(long)]
    pub objects: Option<usize>,
    /// Rows (default 24).
    #[arg(long)]
    pub times: Option<usize>,
    /// Planted groups (default 3).
    #[arg(long)]
    pub groups: Option<usize>,
    /// Noise deviation relative to each column's RMS.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Share of objects drawn independently of every group.
    #[arg(long)]
    pub indep: Option<f64>,
    /// Generator seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Panel CSV; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Ground-truth labels; defaults to `truth.json` next to the output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Wide CSV: a time column, then one column per object.
    pub input: PathBuf,
    /// gsa (greedy, default) or ssa (single scan).
    #[arg(long)]
    pub method: Option<Algorithm>,
    /// aff (joint affine fit, default) or ls (per-column fit).
    #[arg(long)]
    pub measure: Option<DistanceMeasure>,
    /// Relative error bound in (0, 1] (required).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Share of columns allowed to exceed epsilon (default 0).
    #[arg(long)]
    pub delta: Option<f64>,
    /// first_column, max_variance, index:K or seeded_random:SEED.
    #[arg(long)]
    pub pivot: Option<PivotPolicy>,
    /// fixed (default) or evolving.
    #[arg(long, value_parser = parse_budget_rule)]
    pub budget_rule: Option<BudgetRule>,
    /// Screen pairs with cached inner products first (same result, less work).
    #[arg(long)]
    pub prefilter: bool,
    /// Selection JSON (required).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Coefficient table; defaults to `<output stem>.coefficients.csv`.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    /// Also write the columns a decompressor needs (centrals and pivots).
    #[arg(long)]
    pub dominant_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Selection JSON written by `select`.
    pub selection: PathBuf,
    /// Wide CSV holding at least the stored columns.
    pub dominant: PathBuf,
    /// Reconstructed CSV (required).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reference CSV.
    pub original: PathBuf,
    /// CSV to score; every column must also appear in the reference.
    pub reconstructed: PathBuf,
    /// Flag columns whose relative error exceeds this bound.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Report path; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sweep description JSON.
    pub sweep: PathBuf,
    /// Directory for the report and tables (required).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "DOMTS_THREADS")]
    pub threads: Option<usize>,
}

fn parse_budget_rule(s: &str) -> Result<BudgetRule, String> {
    match s {
        "fixed" => Ok(BudgetRule::Fixed),
        "evolving" => Ok(BudgetRule::Evolving),
        other => Err(format!("unknown budget rule {other:?} (expected fixed or evolving)")),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

type CliResult<T> = Result<T, CliError>;

/// Config-file defaults, consulted only for flags that were not given.
struct Defaults(Map<String, Value>);

impl Defaults {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self(Map::new()));
        };
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => Ok(Self(map)),
            Ok(_) => Err(CliError::Usage(format!("{}: config must be a JSON object", path.display()))),
            Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
        }
    }

    /// Parses string values with `FromStr`, so `"gsa"` or `"index:3"` work.
    fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => s
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
            Some(other) => Err(CliError::Usage(format!("config key {key:?} should be a string, got {other}"))),
        }
    }

    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{}", key.replace('_', "-"))))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(data)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> CliResult<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::File::create(path).map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct TruthDocument<'a> {
    spec: &'a SyntheticSpec,
    #[serde(flatten)]
    truth: &'a PlantedGroups,
}

fn cmd_gen(args: GenArgs, d: &Defaults, out: &mut dyn Write) -> CliResult<()> {
    let spec = SyntheticSpec {
        n_objects: d.require(args.objects, "objects")?,
        n_times: d.pick(args.times, "times")?.unwrap_or(DEFAULT_TIMES),
        n_groups: d.pick(args.groups, "groups")?.unwrap_or(DEFAULT_GROUPS),
        noise_level: d.pick(args.noise, "noise")?.unwrap_or(0.0),
        independent_fraction: d.pick(args.indep, "indep")?.unwrap_or(0.0),
        seed: d.pick(args.seed, "seed")?.unwrap_or(0),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (panel, truth) = generate_synthetic(&spec).map_err(|e| match e {
        TsdError::InvalidSpec(m) => CliError::Usage(format!("invalid synthetic spec: {m}")),
        other => data(other),
    })?;
    let output: Option<PathBuf> = d.pick(args.output, "output")?;
    let truth_path: Option<PathBuf> = d.pick(args.truth, "truth")?;
    let truth_path = truth_path.or_else(|| output.as_ref().map(|o| o.with_file_name("truth.json")));
    match &output {
        Some(path) => panel.write_wide_csv(create(path)?).map_err(data)?,
        None => panel.write_wide_csv(&mut *out).map_err(data)?,
    }
    if let Some(path) = &truth_path {
        write_json(path, &TruthDocument { spec: &spec, truth: &truth })?;
    }
    if let Some(path) = &output {
        let truth_note = truth_path.as_ref().map(|t| format!(" and {}", t.display())).unwrap_or_default();
        writeln!(out, "wrote {} ({}x{}){truth_note}", path.display(), panel.m(), panel.n()).map_err(data)?;
    }
    Ok(())
}

fn selection_error(e: SelectionError) -> CliError {
    match e {
        SelectionError::InvalidConfig(m) => CliError::Usage(m),
        SelectionError::PivotOutOfRange { .. } => CliError::Usage(e.to_string()),
        other => data(other),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_select(args: SelectArgs, d: &Defaults, out: &mut dyn Write) -> CliResult<()> {
    let method = match args.method {
        Some(m) => m,
        None => d.get_parsed("method")?.unwrap_or(Algorithm::Gsa),
    };
    let measure = match args.measure {
        Some(m) => m,
        None => d.get_parsed("measure")?.unwrap_or(DistanceMeasure::Aff),
    };
    let pivot_policy = match args.pivot {
        Some(p) => p,
        None => d.get_parsed("pivot")?.unwrap_or_default(),
    };
    let budget_rule = match args.budget_rule {
        Some(b) => b,
        None => d.get("budget_rule")?.unwrap_or_default(),
    };
    let config = SolverConfig {
        epsilon: d.require(args.epsilon, "epsilon")?,
        delta: d.pick(args.delta, "delta")?.unwrap_or(0.0),
        measure,
        pivot_policy,
        budget_rule,
        prefilter: args.prefilter || d.get("prefilter")?.unwrap_or(false),
        ..SolverConfig::default()
    };
    config.validate().map_err(selection_error)?;
    let output: PathBuf = d.require(args.output, "output")?;

    let panel = load_csv(&args.input).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let result = select(&panel, method, &config).map_err(selection_error)?;
    write_json(&output, &result.to_document())?;

    let coef_path = d.pick(args.coefficients, "coefficients")?.unwrap_or_else(|| sibling(&output, "coefficients.csv"));
    let records: Vec<CoefficientRecord> = result
        .assignments
        .iter()
        .map(|a| CoefficientRecord::new(&result.object_ids[a.target], &result.object_ids[a.central], &a.coefficients))
        .collect();
    write_coefficients_csv(create(&coef_path)?, &records).map_err(data)?;
    if let Some(path) = d.pick(args.dominant_out, "dominant_out")? {
        ColumnSet::from_matrix(&panel, &result.stored_columns())
            .write_wide_csv(create(&path)?)
            .map_err(data)?;
    }
    writeln!(
        out,
        "method={}_{} n={} dominant={} dsn_ratio={} budget_used={}",
        method,
        measure,
        result.n(),
        result.dominant.len(),
        result.dsn_ratio,
        result.budget_used
    )
    .map_err(data)?;
    Ok(())
}

fn cmd_reconstruct(args: ReconstructArgs, d: &Defaults, out: &mut dyn Write) -> CliResult<()> {
    let output: PathBuf = d.require(args.output, "output")?;
    let text = fs::read_to_string(&args.selection).map_err(|e| io_err(&args.selection, e))?;
    let doc: SelectionDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.selection.display())))?;
    let result = SelectionResult::from_document(&doc).map_err(data)?;
    let stored = load_column_set(&args.dominant).map_err(|e| CliError::Data(format!("{}: {e}", args.dominant.display())))?;
    let rebuilt = reconstruct_targets(&stored, &result).map_err(|e| match e {
        ReconstructError::MissingCoefficients(_) | ReconstructError::MissingColumns(_) => data(e),
        other => data(other),
    })?;
    rebuilt.write_wide_csv(create(&output)?).map_err(data)?;
    writeln!(out, "wrote {} target column(s) to {}", rebuilt.ids.len(), output.display()).map_err(data)?;
    Ok(())
}

/// Loss of a reconstruction, restricted to the columns it contains.
#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub columns: Vec<String>,
    #[serde(flatten)]
    pub loss: LossReport,
    pub relative_errors: Vec<f64>,
    pub epsilon: Option<f64>,
    pub violations: Vec<String>,
    /// Share of all columns in the original file, since stored ones are exact.
    pub violation_fraction: f64,
}

pub fn evaluate_files(original: &ColumnSet, rebuilt: &ColumnSet, epsilon: Option<f64>) -> CliResult<EvalReport> {
    if original.timestamps != rebuilt.timestamps {
        return Err(CliError::Data("time labels of the two files differ".into()));
    }
    let mut orig_cols = Vec::with_capacity(rebuilt.ids.len());
    for id in &rebuilt.ids {
        let col = original
            .column(id)
            .ok_or_else(|| CliError::Data(format!("column {id:?} is not in the original file")))?;
        orig_cols.push(col.to_vec());
    }
    let m = original.timestamps.len();
    let loss = if rebuilt.ids.is_empty() {
        LossReport {
            loss_matrix: Matrix::zeros(m, 1),
            rmse: Vec::new(),
            mean_rmse: 0.0,
        }
    } else {
        let as_matrix = |cols: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            Matrix::from_columns(&refs).map_err(data)
        };
        information_loss(&as_matrix(&orig_cols)?, &as_matrix(&rebuilt.columns)?).map_err(data)?
    };
    let relative_errors: Vec<f64> = orig_cols
        .iter()
        .zip(&rebuilt.columns)
        .map(|(a, b)| relative_error(a, b))
        .collect();
    let violations: Vec<String> = match epsilon {
        Some(eps) => rebuilt
            .ids
            .iter()
            .zip(&relative_errors)
            .filter(|(_, e)| !(**e <= eps + crate::reconstruct::VIOLATION_SLACK))
            .map(|(id, _)| id.clone())
            .collect(),
        None => Vec::new(),
    };
    Ok(EvalReport {
        columns: rebuilt.ids.clone(),
        violation_fraction: violations.len() as f64 / original.ids.len().max(1) as f64,
        loss,
        relative_errors,
        epsilon,
        violations,
    })
}

fn cmd_eval(args: EvalArgs, d: &Defaults, out: &mut dyn Write) -> CliResult<()> {
    let epsilon: Option<f64> = d.pick(args.epsilon, "epsilon")?;
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            return Err(CliError::Usage("epsilon must be positive".into()));
        }
    }
    let load = |p: &Path| load_column_set(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())));
    let report = evaluate_files(&load(&args.original)?, &load(&args.reconstructed)?, epsilon)?;
    match d.pick(args.output, "output")? {
        Some(path) => {
            let path: PathBuf = path;
            write_json(&path, &report)?;
            writeln!(out, "mean_rmse={} violations={}", report.loss.mean_rmse, report.violations.len()).map_err(data)?;
        }
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(data)?;
            writeln!(out, "{text}").map_err(data)?;
        }
    }
    Ok(())
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::InvalidSpec(_) | BenchError::Json(_) => CliError::Usage(e.to_string()),
        other => data(other),
    }
}

fn cmd_bench(args: BenchArgs, d: &Defaults, out: &mut dyn Write) -> CliResult<()> {
    let output: PathBuf = d.require(args.output, "output")?;
    let threads: Option<usize> = d.pick(args.threads, "threads")?;
    if threads == Some(0) {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let spec = SweepSpec::load(&args.sweep).map_err(bench_error)?;
    let report = run_sweep(&spec, threads).map_err(bench_error)?;
    let mut files = Vec::new();
    for f in [TableFormat::Json, TableFormat::Csv, TableFormat::Markdown] {
        files.extend(emit_tables(&report, f, &output).map_err(bench_error)?);
    }
    let failed = report.rows.iter().filter(|r| !r.ok()).count();
    writeln!(out, "{} cells ({} failed); wrote {} files under {}", report.rows.len(), failed, files.len(), output.display())
        .map_err(data)?;
    Ok(())
}

/// Parses `args` and runs the chosen subcommand, writing progress to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}").map_err(data)?;
                return Ok(());
            }
            return Err(CliError::Usage(e.to_string()));
        }
    };
    let d = Defaults::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(a) => cmd_gen(a, &d, out),
        Command::Select(a) => cmd_select(a, &d, out),
        Command::Reconstruct(a) => cmd_reconstruct(a, &d, out),
        Command::Eval(a) => cmd_eval(a, &d, out),
        Command::Bench(a) => cmd_bench(a, &d, out),
    }
}

/// Binary entry point; returns the process exit code.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    match run(std::env::args_os(), &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.message().trim_end();
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            e.exit_code()
        }
    }
}
