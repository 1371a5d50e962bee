//! The `zforce` command-line front end and sweep harness.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::gnn::{GnnError, ModelParams};
use crate::numeric_verify::{kalman_check, RankReport, ValueRange, VerifyError};
use crate::pattern_graph::{EdgeClassPolicy, GraphError, InputSet, PatternGraph};
use crate::solvers::{exact_minimum, greedy_degree, validate, ExactBudget, Method, SolveError, SolveResult};
use crate::trainer::{solve_rl, train, TrainConfig, TrainError};

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "ZFORCE_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    TrainingAborted(String),
    /// The command ran but the answer is negative (e.g. not a zero forcing set).
    #[error("{0}")]
    Negative(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Negative(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Budget(_) => 3,
            CliError::TrainingAborted(_) => 4,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Budget(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::TrainingAborted(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "zforce", version, about = "Minimum input sets for strong structural controllability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find an input set with the greedy, exact or learned solver.
    Solve(SolveArgs),
    /// Train an actor-critic model on one graph.
    Train(TrainArgs),
    /// Run a grid of random-graph experiments.
    Sweep(SweepArgs),
    /// Check whether an input set is a zero forcing set.
    Verify(VerifyArgs),
    /// Count controllable integer realizations.
    RankCheck(RankCheckArgs),
    /// Compare degree statistics of an input set against the whole graph.
    DegreeReport(DegreeReportArgs),
    /// Write a random graph.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Pattern matrix (`.csv`) or edge list (anything else).
    pub graph: PathBuf,
    #[arg(long, default_value = "greedy")]
    pub method: Method,
    /// Model checkpoint, required for `rl`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Node-count ceiling for the exact solver.
    #[arg(long, default_value_t = ExactBudget::default().max_nodes)]
    pub max_nodes: usize,
    /// Time budget for the exact solver, in seconds.
    #[arg(long, default_value_t = ExactBudget::default().time.as_secs_f64())]
    pub time_limit: f64,
    /// Identifier written in the CSV row; defaults to the file stem.
    #[arg(long)]
    pub graph_id: Option<String>,
    /// Write 0 in the elapsed column.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub graph: PathBuf,
    /// TOML training config; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Where the best model is saved.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Per-episode CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML sweep spec.
    pub spec: PathBuf,
    /// Output CSV; existing rows are kept and skipped.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub graph: PathBuf,
    /// Node ids separated by `,` or `;`.
    #[arg(long)]
    pub inputs: String,
}

#[derive(Debug, Args)]
pub struct RankCheckArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub inputs: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = ValueRange::default().lo, allow_hyphen_values = true)]
    pub lo: i64,
    #[arg(long, default_value_t = ValueRange::default().hi, allow_hyphen_values = true)]
    pub hi: i64,
    #[arg(long)]
    pub graph_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct DegreeReportArgs {
    pub graph: PathBuf,
    /// Input set; the greedy solution is used when omitted.
    #[arg(long)]
    pub inputs: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GraphFormat {
    Edges,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of edges drawn as `?`.
    #[arg(long, default_value_t = 0.0)]
    pub arbitrary_fraction: f64,
    #[arg(long, value_enum, default_value = "edges")]
    pub format: GraphFormat,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Train(a) => cmd_train(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::RankCheck(a) => cmd_rank_check(a, out),
        Command::DegreeReport(a) => cmd_degree_report(a, out),
        Command::Generate(a) => cmd_generate(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Invalid(format!("write failed: {e}")))
}

/// Reads a graph: `.csv` files hold a pattern matrix, anything else an
/// edge list.
pub fn load_graph(path: &Path) -> Result<PatternGraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let g = if is_csv {
        PatternGraph::from_pattern_csv(&text)
    } else {
        PatternGraph::from_edge_list(&text)
    };
    g.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_inputs(g: &PatternGraph, text: &str) -> Result<InputSet, CliError> {
    let s = InputSet::parse(text)?;
    g.check_inputs(&s)?;
    Ok(s)
}

fn graph_id(path: &Path, explicit: &Option<String>) -> String {
    explicit.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

fn exact_budget(max_nodes: usize, secs: f64) -> Result<ExactBudget, CliError> {
    let time = Duration::try_from_secs_f64(secs)
        .map_err(|_| CliError::Invalid(format!("invalid time limit {secs}")))?;
    Ok(ExactBudget { max_nodes, time })
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let result = match a.method {
        Method::Greedy => greedy_degree(&g),
        Method::Exact => exact_minimum(&g, exact_budget(a.max_nodes, a.time_limit)?)?,
        Method::Rl => {
            let path = a
                .checkpoint
                .as_ref()
                .ok_or_else(|| CliError::Invalid("method rl needs --checkpoint".into()))?;
            let params = ModelParams::load(path)?;
            solve_rl(&g, &params)?
        }
    };
    if !validate(&g, &result.inputs).valid {
        return Err(CliError::Negative(format!(
            "{} produced an input set that is not zero forcing",
            result.method
        )));
    }
    let id = graph_id(&a.graph, &a.graph_id);
    emit(
        out,
        &format!(
            "{}\n{}\n",
            SolveResult::CSV_HEADER,
            result.csv_row(&id, g.node_count(), !a.no_timing)
        ),
    )
}

fn train_config(path: Option<&Path>) -> Result<TrainConfig, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Ok(TrainConfig::from_toml(&text)?)
        }
        None => Ok(TrainConfig::default()),
    }
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let mut cfg = train_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    cfg.validate()?;
    let report = train(&g, &cfg)?;
    let params = report.best_params.as_ref().unwrap_or(&report.final_params);
    params.save(&a.checkpoint)?;
    if let Some(log) = &a.log {
        report.write_log(log).map_err(|e| io_err(log, e))?;
    }
    let _ = writeln!(
        err,
        "trained {} episodes in {:.2}s",
        cfg.episodes,
        report.wall_time.as_secs_f64()
    );
    match &report.best {
        Some(best) => emit(out, &format!("best_z={}\ninputs={}\n", best.len(), best.joined())),
        None => emit(out, "best_z=\ninputs=\n"),
    }
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let inputs = load_inputs(&g, &a.inputs)?;
    let r = validate(&g, &inputs);
    let verdict = |ok: bool| if ok { "complete" } else { "incomplete" };
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    let mut text = format!("inputs={}\n", inputs.joined());
    text += &format!("original={}\n", verdict(r.original_complete));
    if !r.original_complete {
        text += &format!("uncolored_original={}\n", list(&r.uncolored_original));
    }
    text += &format!("modified={}\n", verdict(r.modified_complete));
    if !r.modified_complete {
        text += &format!("uncolored_modified={}\n", list(&r.uncolored_modified));
    }
    text += &format!("valid={}\n", r.valid);
    emit(out, &text)?;
    if r.valid {
        Ok(())
    } else {
        Err(CliError::Negative("not a zero forcing set".into()))
    }
}

pub fn cmd_rank_check(a: &RankCheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let inputs = load_inputs(&g, &a.inputs)?;
    let report = kalman_check(&g, &inputs, a.trials, a.seed, ValueRange { lo: a.lo, hi: a.hi })?;
    let id = graph_id(&a.graph, &a.graph_id);
    emit(
        out,
        &format!("{}\n{}\n", RankReport::CSV_HEADER, report.csv_row(&id, &inputs)),
    )
}

/// One row of a degree comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeRow {
    pub count: usize,
    pub avg_degree: f64,
    pub avg_in_degree: f64,
    pub avg_out_degree: f64,
}

impl DegreeRow {
    pub const CSV_HEADER: &'static str = "set,count,avg_degree,avg_in_degree,avg_out_degree";

    /// Averages over `nodes`; NaN for an empty selection.
    pub fn over(g: &PatternGraph, nodes: &[usize]) -> Self {
        let deg = g.degrees();
        let k = nodes.len() as f64;
        let ins: usize = nodes.iter().map(|&v| deg[v].in_degree).sum();
        let outs: usize = nodes.iter().map(|&v| deg[v].out_degree).sum();
        DegreeRow {
            count: nodes.len(),
            avg_degree: (ins + outs) as f64 / k,
            avg_in_degree: ins as f64 / k,
            avg_out_degree: outs as f64 / k,
        }
    }

    pub fn csv_row(&self, label: &str) -> String {
        let f = |x: f64| if x.is_nan() { String::new() } else { format!("{x:.6}") };
        format!(
            "{},{},{},{},{}",
            label,
            self.count,
            f(self.avg_degree),
            f(self.avg_in_degree),
            f(self.avg_out_degree)
        )
    }
}

/// Whole-graph and input-set degree rows.
pub fn degree_report(g: &PatternGraph, inputs: &InputSet) -> (DegreeRow, DegreeRow) {
    let all: Vec<usize> = (0..g.node_count()).collect();
    (DegreeRow::over(g, &all), DegreeRow::over(g, inputs.nodes()))
}

pub fn cmd_degree_report(a: &DegreeReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let inputs = match &a.inputs {
        Some(t) => load_inputs(&g, t)?,
        None => greedy_degree(&g).inputs,
    };
    let (all, set) = degree_report(&g, &inputs);
    emit(
        out,
        &format!(
            "{}\n{}\n{}\n",
            DegreeRow::CSV_HEADER,
            all.csv_row("all"),
            set.csv_row("inputs")
        ),
    )
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let policy = EdgeClassPolicy {
        arbitrary_fraction: a.arbitrary_fraction,
    };
    let g = PatternGraph::generate_er(a.n, a.p, a.seed, policy)?;
    match a.format {
        GraphFormat::Edges => emit(out, &g.to_edge_list()),
        GraphFormat::Csv => emit(out, &g.to_pattern_csv()),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSpec {
    pub max_nodes: usize,
    pub time_limit_secs: f64,
}

impl Default for ExactSpec {
    fn default() -> Self {
        let b = ExactBudget::default();
        ExactSpec {
            max_nodes: b.max_nodes,
            time_limit_secs: b.time.as_secs_f64(),
        }
    }
}

/// Experiment grid: every `(n, p, seed, method)` combination is one row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    /// Graph seeds per `(n, p)` cell.
    pub seeds: usize,
    #[serde(default)]
    pub seed_offset: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub arbitrary_fraction: f64,
    #[serde(default)]
    pub exact: ExactSpec,
    /// Training settings for `rl`; the training seed is offset by the graph seed.
    #[serde(default)]
    pub train: TrainConfig,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec =
            toml::from_str(text).map_err(|e| CliError::Invalid(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Invalid(format!("sweep spec: {m}")));
        if self.n.is_empty() || self.p.is_empty() || self.methods.is_empty() {
            return bad("n, p and methods must be non-empty");
        }
        if self.seeds == 0 {
            return bad("seeds must be positive");
        }
        if self.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("p values must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.arbitrary_fraction) {
            return bad("arbitrary_fraction must lie in [0, 1]");
        }
        exact_budget(self.exact.max_nodes, self.exact.time_limit_secs)?;
        if self.methods.contains(&Method::Rl) {
            self.train.validate()?;
        }
        Ok(())
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &p in &self.p {
                for k in 0..self.seeds as u64 {
                    for &method in &self.methods {
                        cells.push(SweepCell {
                            n,
                            p,
                            seed: self.seed_offset + k,
                            method,
                        });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub method: Method,
}

impl SweepCell {
    /// Identity of a row, as written in the first four columns.
    pub fn key(&self) -> String {
        format!("{},{},{},{}", self.n, self.p, self.seed, self.method)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub z: usize,
    pub eta: f64,
    /// `|E| / n`, equal to both the mean in-degree and mean out-degree.
    pub mean_degree: f64,
    pub elapsed: Duration,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "n,p,seed,method,z,eta,mean_degree,elapsed_ms";

    pub fn csv_row(&self, timing: bool) -> String {
        let ms = if timing { self.elapsed.as_millis() } else { 0 };
        format!(
            "{},{},{:.6},{:.6},{}",
            self.cell.key(),
            self.z,
            self.eta,
            self.mean_degree,
            ms
        )
    }
}

/// Solves one cell.
pub fn run_cell(spec: &SweepSpec, cell: SweepCell) -> Result<SweepRow, CliError> {
    let policy = EdgeClassPolicy {
        arbitrary_fraction: spec.arbitrary_fraction,
    };
    let g = PatternGraph::generate_er(cell.n, cell.p, cell.seed, policy)?;
    let start = Instant::now();
    let result = match cell.method {
        Method::Greedy => greedy_degree(&g),
        Method::Exact => exact_minimum(&g, exact_budget(spec.exact.max_nodes, spec.exact.time_limit_secs)?)?,
        Method::Rl => {
            let cfg = TrainConfig {
                seed: spec.train.seed.wrapping_add(cell.seed),
                ..spec.train.clone()
            };
            let report = train(&g, &cfg)?;
            let params = report.best_params.as_ref().unwrap_or(&report.final_params);
            solve_rl(&g, params)?
        }
    };
    debug_assert!(validate(&g, &result.inputs).valid);
    let n = g.node_count();
    Ok(SweepRow {
        cell,
        z: result.size,
        eta: result.eta,
        mean_degree: if n == 0 { 0.0 } else { g.edge_count() as f64 / n as f64 },
        elapsed: start.elapsed(),
    })
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let k: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        if k == 0 {
            return Err(CliError::Invalid(format!("{WORKERS_ENV} must be positive")));
        }
        b = b.num_threads(k);
    }
    b.build().map_err(|e| CliError::Invalid(format!("worker pool: {e}")))
}

/// Reads an existing sweep CSV, dropping a trailing partial line. Returns
/// the retained text and the keys already present.
fn existing_rows(path: &Path) -> Result<Option<(String, HashSet<String>)>, CliError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path, e)),
    };
    let kept = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if kept.is_empty() {
        return Ok(None);
    }
    let mut lines = kept.lines();
    if lines.next() != Some(SweepRow::CSV_HEADER) {
        return Err(CliError::Invalid(format!(
            "{}: not a sweep table (header mismatch)",
            path.display()
        )));
    }
    let keys = lines
        .map(|l| l.splitn(5, ',').take(4).collect::<Vec<_>>().join(","))
        .collect();
    Ok(Some((kept.to_string(), keys)))
}

/// Runs every pending cell of `spec` in the worker pool and feeds rows to
/// `sink` in cell order. Stops at the first failing cell, after all
/// earlier rows have been delivered.
pub fn run_sweep(
    spec: &SweepSpec,
    done: &HashSet<String>,
    sink: &mut dyn FnMut(&SweepRow) -> Result<(), CliError>,
) -> Result<usize, CliError> {
    let pending: Vec<SweepCell> = spec
        .cells()
        .into_iter()
        .filter(|c| !done.contains(&c.key()))
        .collect();
    let pool = worker_pool()?;
    let (tx, rx) = mpsc::channel::<(usize, Result<SweepRow, CliError>)>();
    std::thread::scope(|scope| {
        let pending = &pending;
        scope.spawn(move || {
            pool.install(|| {
                pending
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (i, &cell)| {
                        let _ = tx.send((i, run_cell(spec, cell)));
                    })
            })
        });
        // Single appender: reorder finished cells back into grid order.
        let mut buffer = BTreeMap::new();
        let mut next = 0;
        let mut failure = None;
        for (i, r) in rx {
            buffer.insert(i, r);
            while let Some(r) = buffer.remove(&next) {
                next += 1;
                if failure.is_some() {
                    continue;
                }
                match r.and_then(|row| sink(&row)) {
                    Ok(()) => {}
                    Err(e) => failure = Some(e),
                }
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(pending.len()),
        }
    })
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.spec).map_err(|e| io_err(&a.spec, e))?;
    let spec = SweepSpec::from_toml(&text)?;
    let timing = !a.no_timing;
    match &a.output {
        None => {
            emit(out, &format!("{}\n", SweepRow::CSV_HEADER))?;
            run_sweep(&spec, &HashSet::new(), &mut |row| {
                emit(out, &format!("{}\n", row.csv_row(timing)))
            })?;
        }
        Some(path) => {
            let (kept, done) = existing_rows(path)?
                .unwrap_or_else(|| (format!("{}\n", SweepRow::CSV_HEADER), HashSet::new()));
            fs::write(path, &kept).map_err(|e| io_err(path, e))?;
            let mut file = fs::OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| io_err(path, e))?;
            let ran = run_sweep(&spec, &done, &mut |row| {
                file.write_all(format!("{}\n", row.csv_row(timing)).as_bytes())
                    .and_then(|_| file.flush())
                    .map_err(|e| io_err(path, e))
            })?;
            let _ = writeln!(err, "{ran} new rows, {} already present", done.len());
        }
    }
    Ok(())
}
