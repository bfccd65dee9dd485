//! Dominant-set selection under an `(epsilon, delta)` contract.
//!
//! Both engines work on the per-column normalised panel, so `epsilon` is a
//! dimensionless relative error. Each discarded column (a *target*) is tied
//! to one retained column (its *central*) by an affine map whose relative
//! error is at most `epsilon`, except for at most a budget of `delta`-admitted
//! targets.
//!
//! * [`ssa`] scans objects in index order: the first open object becomes a
//!   central and takes every open object it can explain.
//! * [`gsa`] first builds the whole [`DominanceGraph`], then repeatedly keeps
//!   the object that explains the most open objects.
//!
//! All ties go to the lowest index, so results are fully deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{AffineCoefficients, AffineError, PairMatrix, MIN_PAIR_ROWS};
use crate::distance::{is_constant, lcd_with_ridge, rmse, DistanceMeasure, GramCache};
use crate::tsd::{normalize, NormalizationInfo, NormalizationMode, TsdMatrix};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("pivot index {index} is out of range for {n} objects")]
    PivotOutOfRange { index: usize, n: usize },
    #[error("pivot column {id:?} is constant; choose another pivot_policy (for example max_variance)")]
    DegeneratePivot { id: String },
    #[error("selection needs at least {MIN_PAIR_ROWS} time rows, got {0}")]
    TooFewRows(usize),
    #[error("malformed selection document: {0}")]
    Document(String),
    #[error(transparent)]
    Affine(#[from] AffineError),
}

pub type Result<T> = std::result::Result<T, SelectionError>;

/// How the shared pivot column `u` is ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PivotPolicy {
    FirstColumn,
    #[default]
    MaxVariance,
    Index(usize),
    SeededRandom(u64),
}

impl fmt::Display for PivotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FirstColumn => f.write_str("first_column"),
            Self::MaxVariance => f.write_str("max_variance"),
            Self::Index(k) => write!(f, "index:{k}"),
            Self::SeededRandom(s) => write!(f, "seeded_random:{s}"),
        }
    }
}

impl FromStr for PivotPolicy {
    type Err = String;

    /// Accepts `first_column`, `max_variance`, `index:K` and `seeded_random:SEED`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> std::result::Result<u64, String> {
            a.ok_or_else(|| format!("pivot policy {head:?} needs an argument, e.g. {head}:3"))?
                .parse()
                .map_err(|_| format!("bad pivot argument in {s:?}"))
        };
        match head {
            "first" | "first_column" => Ok(Self::FirstColumn),
            "max_variance" | "maxvar" => Ok(Self::MaxVariance),
            "index" => Ok(Self::Index(num(arg)? as usize)),
            "seeded_random" | "random" => Ok(Self::SeededRandom(num(arg)?)),
            _ => Err(format!(
                "unknown pivot policy {s:?} (expected first_column, max_variance, index:K or seeded_random:SEED)"
            )),
        }
    }
}

/// How many targets may break `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    /// `floor(delta * n)`, fixed before the run.
    #[default]
    Fixed,
    /// `floor((|P| + |A|) * delta)`, re-evaluated as centrals and assignments accumulate.
    Evolving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub measure: DistanceMeasure,
    pub pivot_policy: PivotPolicy,
    pub ridge: f64,
    pub budget_rule: BudgetRule,
    /// Screen pairs with cached inner products before the exact fit.
    pub prefilter: bool,
    pub normalization: NormalizationMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            delta: 0.0,
            measure: DistanceMeasure::Aff,
            pivot_policy: PivotPolicy::MaxVariance,
            ridge: 0.0,
            budget_rule: BudgetRule::Fixed,
            prefilter: false,
            normalization: NormalizationMode::PerColumnScale,
        }
    }
}

impl SolverConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_measure(mut self, measure: DistanceMeasure) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_pivot(mut self, policy: PivotPolicy) -> Self {
        self.pivot_policy = policy;
        self
    }

    pub fn with_prefilter(mut self, on: bool) -> Self {
        self.prefilter = on;
        self
    }

    pub fn with_budget_rule(mut self, rule: BudgetRule) -> Self {
        self.budget_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(SelectionError::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.epsilon <= 1.0) {
            return Err(SelectionError::InvalidConfig(format!(
                "epsilon must be at most 1, got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(SelectionError::InvalidConfig(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(SelectionError::InvalidConfig(format!(
                "ridge must be non-negative, got {}",
                self.ridge
            )));
        }
        Ok(())
    }
}

/// Budget cap of the fixed rule. The tiny slack keeps `0.1 * 30` at 3.
pub fn budget_cap(delta: f64, n: usize) -> usize {
    (delta * n as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ssa,
    Gsa,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ssa => "SSA",
            Self::Gsa => "GSA",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ssa" => Ok(Self::Ssa),
            "gsa" => Ok(Self::Gsa),
            other => Err(format!("unknown method {other:?} (expected ssa or gsa)")),
        }
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Full preference order of pivot columns under `policy`.
///
/// The first entry is the global pivot; later entries stand in when the
/// global pivot is itself the central or the target of a pair.
pub fn pivot_ranking(matrix: &TsdMatrix, policy: PivotPolicy) -> Result<Vec<usize>> {
    let n = matrix.n();
    Ok(match policy {
        PivotPolicy::FirstColumn => (0..n).collect(),
        PivotPolicy::Index(k) => {
            if k >= n {
                return Err(SelectionError::PivotOutOfRange { index: k, n });
            }
            (0..n).map(|i| (k + i) % n).collect()
        }
        PivotPolicy::MaxVariance => {
            let var: Vec<f64> = (0..n).map(|j| sample_variance(&matrix.column(j))).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
            order
        }
        PivotPolicy::SeededRandom(seed) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order
        }
    })
}

/// The global pivot column under `policy`.
pub fn select_pivot(matrix: &TsdMatrix, policy: PivotPolicy) -> Result<usize> {
    Ok(pivot_ranking(matrix, policy)?[0])
}

/// Normalised columns plus everything needed to evaluate a pair.
struct Workspace {
    columns: Vec<Vec<f64>>,
    constant: Vec<bool>,
    /// Non-constant columns in pivot preference order.
    pivots: Vec<usize>,
    primary: usize,
    norm: NormalizationInfo,
    config: SolverConfig,
    cache: Option<GramCache>,
}

impl Workspace {
    fn new(matrix: &TsdMatrix, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if matrix.m() < MIN_PAIR_ROWS {
            return Err(SelectionError::TooFewRows(matrix.m()));
        }
        let (normed, norm) = normalize(matrix, config.normalization);
        let columns = normed.columns();
        let constant: Vec<bool> = columns.iter().map(|c| is_constant(c)).collect();
        let order = pivot_ranking(&normed, config.pivot_policy)?;
        let primary = order[0];
        if constant[primary] && constant.iter().any(|c| !c) {
            return Err(SelectionError::DegeneratePivot {
                id: matrix.object_ids()[primary].clone(),
            });
        }
        let pivots = order.into_iter().filter(|&j| !constant[j]).collect();
        let cache = config.prefilter.then(|| GramCache::new(&columns));
        Ok(Self {
            columns,
            constant,
            pivots,
            primary,
            norm,
            config: config.clone(),
            cache,
        })
    }

    fn n(&self) -> usize {
        self.columns.len()
    }

    /// Highest-ranked usable pivot distinct from both ends of the pair.
    fn pivot_for(&self, p: usize, v: usize) -> usize {
        self.pivots
            .iter()
            .copied()
            .find(|&u| u != p && u != v)
            .unwrap_or(p)
    }

    fn evaluate(&self, p: usize, v: usize) -> Result<Edge> {
        let u = self.pivot_for(p, v);
        let (cu, cp, cv) = (&self.columns[u], &self.columns[p], &self.columns[v]);
        let out = lcd_with_ridge(
            self.config.measure,
            &PairMatrix::pivot(cu, cp)?,
            &PairMatrix::target(cu, cv)?,
            self.config.ridge,
        )?;
        // a constant central only stands in for other constants
        let distance = if out.degenerate && self.constant[v] {
            crate::distance::recheck_distance(&out.coefficients, cu, cp, cv)
        } else {
            out.distance
        };
        Ok(Edge {
            central: p,
            target: v,
            pivot: u,
            distance,
            coefficients: out.coefficients,
        })
    }

    /// Whether the inner-product screen proves the pair is out of reach.
    fn screened_out(&self, p: usize, v: usize) -> bool {
        match &self.cache {
            Some(cache) if !self.constant[p] => {
                let u = self.pivot_for(p, v);
                !cache.may_accept(self.config.measure, u, p, v, self.config.epsilon)
            }
            _ => false,
        }
    }

    /// The exact edge when it exists and the screen lets it through.
    fn evaluate_unscreened(&self, p: usize, v: usize) -> Result<Option<Edge>> {
        if self.screened_out(p, v) {
            return Ok(None);
        }
        self.evaluate(p, v).map(Some)
    }

    /// The edge `p -> v` if its distance is within `epsilon`.
    fn evaluate_within(&self, p: usize, v: usize) -> Result<Option<Edge>> {
        Ok(self
            .evaluate_unscreened(p, v)?
            .filter(|e| e.distance <= self.config.epsilon))
    }

    /// Reconstruction RMSE of `v` from edge `e`, in original units.
    fn rmse_original(&self, e: &Edge) -> f64 {
        let (u, p, v) = (&self.columns[e.pivot], &self.columns[e.central], &self.columns[e.target]);
        rmse(v, &e.coefficients.predict_right(u, p)) * self.norm.scales[e.target]
    }

    fn budget_allows(&self, used: usize, centrals: usize, assigned: usize) -> bool {
        let cap = match self.config.budget_rule {
            BudgetRule::Fixed => budget_cap(self.config.delta, self.n()),
            BudgetRule::Evolving => budget_cap(self.config.delta, centrals + assigned),
        };
        used < cap
    }
}

/// A directed relation `central -> target` with its fitted map.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub central: usize,
    pub target: usize,
    pub pivot: usize,
    pub distance: f64,
    pub coefficients: AffineCoefficients,
}

/// Every ordered pair whose distance is within `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceGraph {
    pub n: usize,
    /// Sorted by `(central, target)`.
    pub edges: Vec<Edge>,
}

impl DominanceGraph {
    /// Targets of each node, ascending.
    pub fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for e in &self.edges {
            out[e.central].push(e.target);
        }
        out
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.central, e.target)).collect()
    }
}

fn graph_in(ws: &Workspace) -> Result<DominanceGraph> {
    let n = ws.n();
    let rows: Vec<Result<Vec<Edge>>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut row = Vec::new();
            for v in (0..n).filter(|&v| v != p) {
                if let Some(e) = ws.evaluate_within(p, v)? {
                    row.push(e);
                }
            }
            Ok(row)
        })
        .collect();
    let mut edges = Vec::new();
    for r in rows {
        edges.extend(r?);
    }
    Ok(DominanceGraph { n, edges })
}

/// Evaluates all ordered pairs in parallel; output order does not depend on threads.
pub fn build_dominance_graph(matrix: &TsdMatrix, config: &SolverConfig) -> Result<DominanceGraph> {
    graph_in(&Workspace::new(matrix, config)?)
}

/// One target tied to its central.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: usize,
    pub central: usize,
    /// Column used as the shared `u` of the pair.
    pub pivot: usize,
    pub coefficients: AffineCoefficients,
    /// Relative error on normalised data.
    pub distance: f64,
    /// Admitted through the `delta` budget rather than by `epsilon`.
    pub budgeted: bool,
}

impl Assignment {
    fn from_edge(e: Edge, budgeted: bool) -> Self {
        Self {
            target: e.target,
            central: e.central,
            pivot: e.pivot,
            coefficients: e.coefficients,
            distance: e.distance,
            budgeted,
        }
    }
}

/// Snapshot of one greedy pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyStep {
    pub central: usize,
    /// Open out-neighbours of the chosen central.
    pub out_degree: usize,
    /// Largest open out-degree among the other open candidates.
    pub runner_up: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub algorithm: Algorithm,
    pub config: SolverConfig,
    pub object_ids: Vec<String>,
    /// Global pivot column.
    pub pivot_index: usize,
    /// Centrals in selection order.
    pub dominant: Vec<usize>,
    /// Sorted by target index.
    pub assignments: Vec<Assignment>,
    pub budget_used: usize,
    pub dsn_ratio: f64,
    pub normalization: NormalizationInfo,
    /// Greedy picks of [`gsa`]; empty for [`ssa`].
    pub greedy_steps: Vec<GreedyStep>,
}

impl SelectionResult {
    pub fn n(&self) -> usize {
        self.object_ids.len()
    }

    pub fn assignment_for(&self, target: usize) -> Option<&Assignment> {
        self.assignments
            .binary_search_by_key(&target, |a| a.target)
            .ok()
            .map(|i| &self.assignments[i])
    }

    /// Targets admitted by `epsilon` per central, in selection order.
    pub fn target_counts(&self) -> Vec<usize> {
        self.dominant
            .iter()
            .map(|&p| {
                self.assignments
                    .iter()
                    .filter(|a| a.central == p && !a.budgeted)
                    .count()
            })
            .collect()
    }

    /// Pivot columns outside the dominant set that some reconstruction reads.
    pub fn extra_pivots(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .assignments
            .iter()
            .filter(|a| a.coefficients.uses_pivot() && !self.dominant.contains(&a.pivot))
            .map(|a| a.pivot)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Columns a decompressor needs: centrals then extra pivots, ascending.
    pub fn stored_columns(&self) -> Vec<usize> {
        let mut cols = self.dominant.clone();
        cols.extend(self.extra_pivots());
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    /// Checks the partition, the budget ledger and the recorded distances.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.n();
        let mut seen = vec![0u8; n];
        for &p in &self.dominant {
            seen[p] += 1;
        }
        for a in &self.assignments {
            seen[a.target] += 1;
            if !self.dominant.contains(&a.central) {
                return Err(format!("target {} points at non-central {}", a.target, a.central));
            }
            if !a.budgeted && !(a.distance <= self.config.epsilon) {
                return Err(format!("target {} has distance {} > epsilon", a.target, a.distance));
            }
        }
        if let Some(j) = seen.iter().position(|&c| c != 1) {
            return Err(format!("object {j} appears {} times in the partition", seen[j]));
        }
        let budgeted = self.assignments.iter().filter(|a| a.budgeted).count();
        if budgeted != self.budget_used {
            return Err(format!("{budgeted} budgeted assignments but budget_used = {}", self.budget_used));
        }
        if self.config.budget_rule == BudgetRule::Fixed && budgeted > budget_cap(self.config.delta, n) {
            return Err(format!("budget {budgeted} exceeds floor(delta * n)"));
        }
        if !(self.dsn_ratio > 0.0 && self.dsn_ratio <= 1.0) {
            return Err(format!("dsn_ratio {} outside (0, 1]", self.dsn_ratio));
        }
        Ok(())
    }
}

fn finish(
    algorithm: Algorithm,
    matrix: &TsdMatrix,
    ws: Workspace,
    dominant: Vec<usize>,
    mut assignments: Vec<Assignment>,
    greedy_steps: Vec<GreedyStep>,
) -> SelectionResult {
    assignments.sort_by_key(|a| a.target);
    let budget_used = assignments.iter().filter(|a| a.budgeted).count();
    SelectionResult {
        algorithm,
        config: ws.config.clone(),
        object_ids: matrix.object_ids().to_vec(),
        pivot_index: ws.primary,
        dsn_ratio: dominant.len() as f64 / matrix.n() as f64,
        dominant,
        assignments,
        budget_used,
        normalization: ws.norm,
        greedy_steps,
    }
}

/// Next central: the first open non-constant object, or the first open one.
fn next_open(open: &[bool], constant: &[bool]) -> Option<usize> {
    (0..open.len())
        .find(|&j| open[j] && !constant[j])
        .or_else(|| open.iter().position(|&o| o))
}

/// Scanning selection.
pub fn ssa(matrix: &TsdMatrix, config: &SolverConfig) -> Result<SelectionResult> {
    let ws = Workspace::new(matrix, config)?;
    let n = ws.n();
    let mut open = vec![true; n];
    let mut dominant = Vec::new();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut used = 0;
    while let Some(p) = next_open(&open, &ws.constant) {
        open[p] = false;
        dominant.push(p);
        for v in 0..n {
            if !open[v] {
                continue;
            }
            let exact = ws.evaluate_unscreened(p, v)?;
            if let Some(e) = exact.as_ref().filter(|e| e.distance <= ws.config.epsilon) {
                open[v] = false;
                assignments.push(Assignment::from_edge(e.clone(), false));
            } else if ws.budget_allows(used, dominant.len(), assignments.len()) {
                let e = match exact {
                    Some(e) => e,
                    None => ws.evaluate(p, v)?,
                };
                if e.distance.is_finite() {
                    open[v] = false;
                    used += 1;
                    assignments.push(Assignment::from_edge(e, true));
                }
            }
        }
    }
    Ok(finish(Algorithm::Ssa, matrix, ws, dominant, assignments, Vec::new()))
}

/// Greedy selection over the precomputed dominance graph.
pub fn gsa(matrix: &TsdMatrix, config: &SolverConfig) -> Result<SelectionResult> {
    let ws = Workspace::new(matrix, config)?;
    let graph = graph_in(&ws)?;
    gsa_on_graph(matrix, ws, &graph)
}

fn gsa_on_graph(matrix: &TsdMatrix, ws: Workspace, graph: &DominanceGraph) -> Result<SelectionResult> {
    let n = ws.n();
    let mut out_edges: Vec<Vec<&Edge>> = vec![Vec::new(); n];
    let mut in_nodes: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        out_edges[e.central].push(e);
        in_nodes[e.target].push(e.central);
    }
    let mut degree: Vec<usize> = out_edges.iter().map(Vec::len).collect();
    let mut open = vec![true; n];
    let mut open_count = n;
    let close = |j: usize, open: &mut Vec<bool>, degree: &mut Vec<usize>, count: &mut usize| {
        open[j] = false;
        *count -= 1;
        for &q in &in_nodes[j] {
            degree[q] -= 1;
        }
    };

    let track_budget = ws.config.delta > 0.0;
    // best (rmse, edge) of every open object against the current centrals
    let mut best: Vec<Option<(f64, Edge)>> = vec![None; n];
    let mut dominant = Vec::new();
    let mut assignments = Vec::new();
    let mut steps = Vec::new();
    let mut used = 0;

    while open_count > 0 {
        let any_varying = (0..n).any(|j| open[j] && !ws.constant[j]);
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| open[j] && (!any_varying || !ws.constant[j]))
            .collect();
        let mut p = candidates[0];
        for &j in &candidates[1..] {
            if degree[j] > degree[p] {
                p = j;
            }
        }
        let runner_up = candidates
            .iter()
            .filter(|&&j| j != p)
            .map(|&j| degree[j])
            .max()
            .unwrap_or(0);
        steps.push(GreedyStep {
            central: p,
            out_degree: degree[p],
            runner_up,
        });
        dominant.push(p);
        close(p, &mut open, &mut degree, &mut open_count);
        for e in &out_edges[p] {
            if open[e.target] {
                close(e.target, &mut open, &mut degree, &mut open_count);
                assignments.push(Assignment::from_edge((*e).clone(), false));
            }
        }

        if !track_budget {
            continue;
        }
        for v in 0..n {
            if !open[v] {
                continue;
            }
            let e = ws.evaluate(p, v)?;
            if !e.distance.is_finite() {
                continue;
            }
            let r = ws.rmse_original(&e);
            if best[v].as_ref().is_none_or(|(b, _)| r < *b) {
                best[v] = Some((r, e));
            }
        }
        while open_count > 0 && ws.budget_allows(used, dominant.len(), assignments.len()) {
            let pick = (0..n)
                .filter(|&v| open[v])
                .filter_map(|v| best[v].as_ref().map(|(r, _)| (*r, v)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let Some((_, v)) = pick else { break };
            let (_, e) = best[v].take().expect("picked from populated entries");
            close(v, &mut open, &mut degree, &mut open_count);
            used += 1;
            assignments.push(Assignment::from_edge(e, true));
        }
    }
    Ok(finish(Algorithm::Gsa, matrix, ws, dominant, assignments, steps))
}

/// Runs either engine.
pub fn select(matrix: &TsdMatrix, algorithm: Algorithm, config: &SolverConfig) -> Result<SelectionResult> {
    match algorithm {
        Algorithm::Ssa => ssa(matrix, config),
        Algorithm::Gsa => gsa(matrix, config),
    }
}

/// Serialised form of one assignment, keyed by object ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub target: String,
    pub central: String,
    pub pivot: String,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    pub distance: f64,
    pub budgeted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub mode: NormalizationMode,
    pub scales: BTreeMap<String, f64>,
}

/// JSON document of a [`SelectionResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDocument {
    pub method: Algorithm,
    pub config: SolverConfig,
    pub pivot_index: usize,
    pub pivot_id: String,
    pub object_ids: Vec<String>,
    pub dominant: Vec<String>,
    pub assignments: Vec<AssignmentRecord>,
    pub dsn_ratio: f64,
    pub budget_used: usize,
    pub normalization: NormalizationRecord,
}

impl SelectionResult {
    pub fn to_document(&self) -> SelectionDocument {
        let id = |j: usize| self.object_ids[j].clone();
        SelectionDocument {
            method: self.algorithm,
            config: self.config.clone(),
            pivot_index: self.pivot_index,
            pivot_id: id(self.pivot_index),
            object_ids: self.object_ids.clone(),
            dominant: self.dominant.iter().map(|&j| id(j)).collect(),
            assignments: self
                .assignments
                .iter()
                .map(|a| {
                    let [a11, a12, a21, a22, b1, b2] = a.coefficients.as_array();
                    AssignmentRecord {
                        target: id(a.target),
                        central: id(a.central),
                        pivot: id(a.pivot),
                        a11,
                        a12,
                        a21,
                        a22,
                        b1,
                        b2,
                        distance: a.distance,
                        budgeted: a.budgeted,
                    }
                })
                .collect(),
            dsn_ratio: self.dsn_ratio,
            budget_used: self.budget_used,
            normalization: NormalizationRecord {
                mode: self.normalization.mode,
                scales: self
                    .object_ids
                    .iter()
                    .cloned()
                    .zip(self.normalization.scales.iter().copied())
                    .collect(),
            },
        }
    }

    pub fn from_document(doc: &SelectionDocument) -> Result<Self> {
        let index: BTreeMap<&str, usize> = doc
            .object_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if index.len() != doc.object_ids.len() {
            return Err(SelectionError::Document("duplicate object ids".into()));
        }
        let look = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| SelectionError::Document(format!("unknown object id {s:?}")))
        };
        let dominant = doc.dominant.iter().map(|s| look(s)).collect::<Result<Vec<_>>>()?;
        let mut assignments = doc
            .assignments
            .iter()
            .map(|a| {
                Ok(Assignment {
                    target: look(&a.target)?,
                    central: look(&a.central)?,
                    pivot: look(&a.pivot)?,
                    coefficients: AffineCoefficients::from_array([a.a11, a.a12, a.a21, a.a22, a.b1, a.b2]),
                    distance: a.distance,
                    budgeted: a.budgeted,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        assignments.sort_by_key(|a| a.target);
        let scales = doc
            .object_ids
            .iter()
            .map(|id| {
                doc.normalization
                    .scales
                    .get(id)
                    .copied()
                    .ok_or_else(|| SelectionError::Document(format!("no scale for {id:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let constant = vec![false; scales.len()];
        Ok(Self {
            algorithm: doc.method,
            config: doc.config.clone(),
            object_ids: doc.object_ids.clone(),
            pivot_index: doc.pivot_index,
            dominant,
            assignments,
            budget_used: doc.budget_used,
            dsn_ratio: doc.dsn_ratio,
            normalization: NormalizationInfo {
                mode: doc.normalization.mode,
                scales,
                constant,
            },
            greedy_steps: Vec::new(),
        })
    }
}
