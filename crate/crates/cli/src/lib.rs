//! Command implementations behind the `sptrsv` binary.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args, ValueEnum};
use serde::Serialize;
use sptrsv_core::arch::ArchConfig;
use sptrsv_core::graph::{
    binary_node_count, build_dag, dag_metrics, peak_throughput_raw, DagMetrics, SolveDag,
};
use sptrsv_core::isa::{CompileStats, Program};
use sptrsv_core::matrix::{load_matrix_market, load_rhs, CsrMatrix, Rhs};
use sptrsv_core::oracle::{max_relative_error, solve_serial};
use sptrsv_core::sched::{self, Allocation, Dataflow, ScheduleOptions};
use sptrsv_core::sim::{self, Breakdown};
use sptrsv_core::{compile, compile_sweep, schedule_matrix, synth, Error as CoreError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Name accepted in place of a matrix path for the built-in three-CU dataflow example.
pub const DATAFLOW_EXAMPLE: &str = "dataflow-example";

/// Relative tolerance for simulator-versus-oracle verification.
pub const VERIFY_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataflowArg {
    Medium,
    Coarse,
}

/// Architecture and scheduling knobs shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// log2 of the CU count.
    #[arg(long, default_value_t = 6)]
    pub n_log2: u32,
    /// log2 of the x_i register file depth.
    #[arg(long, default_value_t = 6)]
    pub m_log2: u32,
    /// log2 of the psum register file depth.
    #[arg(long, default_value_t = 3)]
    pub k_log2: u32,
    /// log2 of the per-CU data-memory depth.
    #[arg(long, default_value_t = 7)]
    pub t_log2: u32,
    #[arg(long, default_value_t = 150.0)]
    pub clock_mhz: f64,
    /// Schedule only, without bank conflicts or register stalls.
    #[arg(long)]
    pub ideal_mode: bool,
    #[arg(long, value_enum, default_value_t = DataflowArg::Medium)]
    pub dataflow: DataflowArg,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub icr: bool,
    /// Usable psum slots; defaults to the full file.
    #[arg(long)]
    pub psum_capacity: Option<usize>,
    /// Right-hand side, one value per line; defaults to all ones.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    /// Take the lower triangle of a general matrix, forcing a usable diagonal.
    #[arg(long)]
    pub lower_extract: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_log2: 6,
            m_log2: 6,
            k_log2: 3,
            t_log2: 7,
            clock_mhz: 150.0,
            ideal_mode: false,
            dataflow: DataflowArg::Medium,
            icr: true,
            psum_capacity: None,
            rhs: None,
            lower_extract: false,
        }
    }
}

impl RunConfig {
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            n_log2: self.n_log2,
            m_log2: self.m_log2,
            k_log2: self.k_log2,
            t_log2: self.t_log2,
            clock_hz: self.clock_mhz * 1e6,
            ideal_mode: self.ideal_mode,
        }
    }

    pub fn options(&self) -> ScheduleOptions {
        ScheduleOptions {
            dataflow: match self.dataflow {
                DataflowArg::Medium => Dataflow::Medium,
                DataflowArg::Coarse => Dataflow::Coarse,
            },
            icr: self.icr,
            psum_capacity: self.psum_capacity,
        }
    }
}

/// Failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input, or a configuration the machine cannot run.
    Input(anyhow::Error),
    /// The simulated solution disagrees with the reference solver.
    Verification(String),
    /// Anything else going wrong inside the pipeline.
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Verification(_) | CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "input error: {e:#}"),
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
            CliError::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Matrix(_) | CoreError::Isa(_) | CoreError::Backend(_) => {
                CliError::Input(e.into())
            }
            CoreError::Schedule(_) | CoreError::Sim(_) => CliError::Internal(e.into()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn bad_input<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Input(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Internal(e.into())
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

pub fn matrix_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn load_matrix(path: &Path, cfg: &RunConfig) -> CliResult<CsrMatrix> {
    load_matrix_market(path, cfg.lower_extract)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(bad_input)
}

pub fn load_rhs_for(m: &CsrMatrix, cfg: &RunConfig) -> CliResult<Rhs> {
    match &cfg.rhs {
        Some(p) => load_rhs(p, m.n()).with_context(|| format!("reading {}", p.display())).map_err(bad_input),
        None => Ok(Rhs::ones(m.n())),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Report {
    pub schema_version: u32,
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub binary_nodes: usize,
    pub cycles: u64,
    pub throughput_gops: f64,
    pub peak_gops: f64,
    pub breakdown: Breakdown,
    pub reuse: u64,
    pub constraints: u64,
    pub compile_seconds: Option<f64>,
    pub verified: Option<bool>,
    pub max_relative_error: Option<f64>,
    pub stats: CompileStats,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug)]
pub struct CompileOutput {
    pub program: Program,
    pub compile_seconds: f64,
    pub metrics: DagMetrics,
}

/// JSON summary printed by `compile`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompileSummary {
    pub schema_version: u32,
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub cycles: usize,
    pub compile_seconds: f64,
    pub peak_gops: f64,
    pub stats: CompileStats,
}

impl CompileOutput {
    pub fn summary(&self) -> CompileSummary {
        CompileSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            matrix: self.program.name.clone(),
            n: self.program.n,
            nnz: self.program.nnz,
            cycles: self.program.cycles(),
            compile_seconds: self.compile_seconds,
            peak_gops: self.metrics.peak_throughput,
            stats: self.program.stats,
        }
    }
}

pub fn cmd_compile(input: &Path, cfg: &RunConfig) -> CliResult<CompileOutput> {
    let m = load_matrix(input, cfg)?;
    let rhs = load_rhs_for(&m, cfg)?;
    let c = compile(&m, &rhs, &cfg.arch(), &cfg.options(), &matrix_name(input))?;
    Ok(CompileOutput { program: c.program, compile_seconds: c.compile_seconds, metrics: c.metrics })
}

pub fn is_program_file(path: &Path) -> bool {
    let mut magic = [0u8; 5];
    fs::File::open(path).and_then(|mut f| f.read_exact(&mut magic)).is_ok() && &magic == b"SPTV1"
}

/// Simulates a matrix (compiling it first) or a program file, then verifies
/// against the serial reference when `verify` is set.
pub fn cmd_run(input: &Path, matrix: Option<&Path>, verify: bool, cfg: &RunConfig) -> CliResult<Report> {
    let (program, compile_seconds, m) = if is_program_file(input) {
        let bytes = fs::read(input).map_err(input_err(input))?;
        let p = Program::from_bytes(&bytes).with_context(|| format!("reading {}", input.display())).map_err(bad_input)?;
        let m = match matrix {
            Some(path) => Some(load_matrix(path, cfg)?),
            None if verify => {
                return Err(bad_input(anyhow!("verifying a program file needs --matrix (or pass --no-verify)")))
            }
            None => None,
        };
        (p, None, m)
    } else {
        let m = load_matrix(input, cfg)?;
        let rhs = load_rhs_for(&m, cfg)?;
        let c = compile(&m, &rhs, &cfg.arch(), &cfg.options(), &matrix_name(input))?;
        (c.program, Some(c.compile_seconds), Some(m))
    };
    if let Some(m) = &m {
        if m.n() != program.n || m.nnz() != program.nnz {
            return Err(bad_input(anyhow!(
                "matrix has n={}, nnz={} but the program was compiled for n={}, nnz={}",
                m.n(),
                m.nnz(),
                program.n,
                program.nnz
            )));
        }
    }

    let r = sim::run(&program).map_err(|e| internal(CoreError::from(e)))?;
    let mut report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        matrix: program.name.clone(),
        n: program.n,
        nnz: program.nnz,
        binary_nodes: 2 * program.nnz - program.n,
        cycles: r.total_cycles,
        throughput_gops: r.throughput_gops,
        peak_gops: peak_throughput_raw(program.n, program.nnz, program.cus(), program.arch.clock_hz),
        breakdown: r.breakdown,
        reuse: program.stats.reuse,
        constraints: program.stats.constraints,
        compile_seconds,
        verified: None,
        max_relative_error: None,
        stats: program.stats,
        warnings: program.capacity_warnings(),
    };
    if verify {
        let m = m.expect("matrix present when verifying");
        let rhs = load_rhs_for(&m, cfg)?;
        let expected = solve_serial(&m, &rhs);
        let (err, at) = max_relative_error(&r.x, &expected.0);
        report.verified = Some(err <= VERIFY_TOLERANCE);
        report.max_relative_error = Some(err);
        if err > VERIFY_TOLERANCE {
            return Err(CliError::Verification(format!(
                "row {at}: simulated {} vs reference {} (relative error {err:.3e})",
                r.x[at], expected.0[at]
            )));
        }
    }
    Ok(report)
}

fn input_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| bad_input(anyhow::Error::new(e).context(format!("reading {}", path.display())))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub capacity: usize,
    pub total_cycles: u64,
    pub blocking_cycles: u64,
    pub normalized_cycles: f64,
    pub normalized_blocking: f64,
    /// Set on the first capacity from which blocking no longer changes.
    pub plateau: bool,
}

/// Cycles and blocking cycles of one configuration: simulated, or from the
/// schedule alone in ideal mode.
fn measure(m: &CsrMatrix, rhs: &Rhs, cfg: &RunConfig, opts: &ScheduleOptions, name: &str) -> CliResult<(u64, Breakdown)> {
    let arch = cfg.arch();
    if arch.ideal_mode {
        let (_, s) = schedule_matrix(m, &arch, opts)?;
        let nops = s.nop_counts();
        let b = Breakdown {
            exec: s.execute_count() as u64,
            bnop: nops[0] as u64,
            pnop: nops[1] as u64,
            dnop: nops[2] as u64,
            lnop: nops[3] as u64,
        };
        return Ok((s.total_cycles() as u64, b));
    }
    let c = compile(m, rhs, &arch, opts, name)?;
    let r = sim::run(&c.program).map_err(|e| internal(CoreError::from(e)))?;
    Ok((r.total_cycles, r.breakdown))
}

pub fn sweep_psum(m: &CsrMatrix, rhs: &Rhs, cfg: &RunConfig, capacities: &[usize], name: &str) -> CliResult<Vec<SweepRow>> {
    let measured: Vec<(u64, Breakdown)> = if cfg.ideal_mode {
        capacities
            .iter()
            .map(|&c| measure(m, rhs, cfg, &ScheduleOptions { psum_capacity: Some(c), ..cfg.options() }, name))
            .collect::<CliResult<_>>()?
    } else {
        compile_sweep(m, rhs, &cfg.arch(), &cfg.options(), capacities, name)?
            .iter()
            .map(|c| {
                let r = sim::run(&c.program).map_err(|e| internal(CoreError::from(e)))?;
                Ok((r.total_cycles, r.breakdown))
            })
            .collect::<CliResult<_>>()?
    };
    let mut rows = Vec::with_capacity(capacities.len());
    for (&capacity, &(cycles, b)) in capacities.iter().zip(&measured) {
        rows.push(SweepRow {
            capacity,
            total_cycles: cycles,
            blocking_cycles: b.blocking(),
            normalized_cycles: 0.0,
            normalized_blocking: 0.0,
            plateau: false,
        });
    }
    if let Some(first) = rows.first().cloned() {
        for r in &mut rows {
            r.normalized_cycles = r.total_cycles as f64 / first.total_cycles.max(1) as f64;
            r.normalized_blocking = r.blocking_cycles as f64 / first.blocking_cycles.max(1) as f64;
        }
        let last = rows.last().expect("non-empty").blocking_cycles;
        let start = rows.iter().rposition(|r| r.blocking_cycles != last).map_or(0, |i| i + 1);
        rows[start].plateau = true;
    }
    Ok(rows)
}

pub fn cmd_sweep_psum(input: &Path, cfg: &RunConfig, capacities: &[usize]) -> CliResult<Vec<SweepRow>> {
    let m = load_matrix(input, cfg)?;
    let rhs = load_rhs_for(&m, cfg)?;
    sweep_psum(&m, &rhs, cfg, capacities, &matrix_name(input))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareRow {
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub binary_nodes: usize,
    pub peak_gops: f64,
    pub coarse_cycles: u64,
    pub coarse_gops: f64,
    pub medium_cycles: u64,
    pub medium_gops: f64,
    pub medium_psum_cycles: u64,
    pub medium_psum_gops: f64,
    pub medium_psum_icr_cycles: u64,
    pub medium_psum_icr_gops: f64,
    pub cdu_node_ratio: f64,
    pub cdu_edge_ratio: f64,
    pub cdu_level_ratio: f64,
    pub load_balance_degree: f64,
}

/// The four compared variants, in column order.
pub fn compare_variants(cfg: &RunConfig) -> [ScheduleOptions; 4] {
    let cap = cfg.psum_capacity;
    [
        ScheduleOptions { dataflow: Dataflow::Coarse, icr: false, psum_capacity: Some(0) },
        ScheduleOptions { dataflow: Dataflow::Medium, icr: false, psum_capacity: Some(0) },
        ScheduleOptions { dataflow: Dataflow::Medium, icr: false, psum_capacity: cap },
        ScheduleOptions { dataflow: Dataflow::Medium, icr: true, psum_capacity: cap },
    ]
}

fn gops(binary_nodes: usize, cycles: u64, clock_hz: f64) -> f64 {
    if cycles == 0 {
        return 0.0;
    }
    binary_nodes as f64 / (cycles as f64 / clock_hz) / 1e9
}

fn compare_row(name: &str, m: &CsrMatrix, metrics: &DagMetrics, cycles: [u64; 4], clock_hz: f64) -> CompareRow {
    let bn = binary_node_count(m);
    let g = |c| gops(bn, c, clock_hz);
    CompareRow {
        matrix: name.to_string(),
        n: m.n(),
        nnz: m.nnz(),
        binary_nodes: bn,
        peak_gops: metrics.peak_throughput,
        coarse_cycles: cycles[0],
        coarse_gops: g(cycles[0]),
        medium_cycles: cycles[1],
        medium_gops: g(cycles[1]),
        medium_psum_cycles: cycles[2],
        medium_psum_gops: g(cycles[2]),
        medium_psum_icr_cycles: cycles[3],
        medium_psum_icr_gops: g(cycles[3]),
        cdu_node_ratio: metrics.cdu.cdu_node_ratio,
        cdu_edge_ratio: metrics.cdu.cdu_edge_ratio,
        cdu_level_ratio: metrics.cdu.cdu_level_ratio,
        load_balance_degree: metrics.load_balance_degree,
    }
}

pub fn compare_matrix(m: &CsrMatrix, rhs: &Rhs, cfg: &RunConfig, name: &str) -> CliResult<CompareRow> {
    let arch = cfg.arch();
    let mut cycles = [0u64; 4];
    for (slot, opts) in cycles.iter_mut().zip(compare_variants(cfg)) {
        *slot = measure(m, rhs, cfg, &opts, name)?.0;
    }
    let d = build_dag(m);
    let assignment: Vec<usize> = (0..m.n()).map(|v| v % arch.cus()).collect();
    let metrics = dag_metrics(m, &d, &assignment, arch.cus(), arch.clock_hz);
    Ok(compare_row(name, m, &metrics, cycles, arch.clock_hz))
}

/// The three-CU example with pre-solved roots; schedule analysis only.
pub fn compare_dataflow_example(cfg: &RunConfig) -> CliResult<CompareRow> {
    if !cfg.ideal_mode {
        return Err(bad_input(anyhow!("{DATAFLOW_EXAMPLE} has pre-solved nodes and needs --ideal-mode")));
    }
    let ex = synth::dataflow_example();
    let d: SolveDag = build_dag(&ex.matrix);
    let alloc = Allocation::custom(&d, ex.cus, ex.assignment.clone(), &ex.presolved).map_err(internal)?;
    let arch = cfg.arch();
    let mut cycles = [0u64; 4];
    for (slot, opts) in cycles.iter_mut().zip(compare_variants(cfg)) {
        *slot = sched::schedule(&d, &arch, &alloc, &opts).map_err(internal)?.total_cycles() as u64;
    }
    let metrics = dag_metrics(&ex.matrix, &d, &ex.assignment, ex.cus, arch.clock_hz);
    Ok(compare_row(DATAFLOW_EXAMPLE, &ex.matrix, &metrics, cycles, arch.clock_hz))
}

pub fn cmd_compare(inputs: &[PathBuf], cfg: &RunConfig) -> CliResult<Vec<CompareRow>> {
    inputs
        .iter()
        .map(|path| {
            if path.as_os_str() == DATAFLOW_EXAMPLE && !path.exists() {
                return compare_dataflow_example(cfg);
            }
            let m = load_matrix(path, cfg)?;
            let rhs = load_rhs_for(&m, cfg)?;
            compare_matrix(&m, &rhs, cfg, &matrix_name(path))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Chain,
    Fanin,
    RandomLower,
    Diagonal,
    BandedRandom,
}

#[derive(Debug, Clone, Args)]
pub struct GenParams {
    /// Rows (chain, random-lower, diagonal, banded-random) or predecessors (fanin).
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Probability of each strictly-lower entry (random-lower).
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    /// Predecessors per row (banded-random).
    #[arg(long, default_value_t = 8)]
    pub max_indegree: usize,
    /// How far back predecessors may lie (banded-random).
    #[arg(long, default_value_t = 256)]
    pub window: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn cmd_gen(kind: GenKind, p: &GenParams) -> CliResult<CsrMatrix> {
    if kind == GenKind::RandomLower && !(0.0..=1.0).contains(&p.density) {
        return Err(bad_input(anyhow!("density {} is outside [0, 1]", p.density)));
    }
    Ok(match kind {
        GenKind::Chain => synth::chain(p.n),
        GenKind::Fanin => synth::fanin(p.n),
        GenKind::RandomLower => synth::random_lower(p.n, p.density, p.seed),
        GenKind::Diagonal => synth::diagonal(p.n),
        GenKind::BandedRandom => synth::banded_random(p.n, p.max_indegree, p.window.max(1), p.seed),
    })
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_machine() {
        let a = RunConfig::default().arch();
        assert_eq!(a, ArchConfig::default());
        assert_eq!((a.cus(), a.xi_words(), a.psum_words()), (64, 64, 8));
        let o = RunConfig::default().options();
        assert_eq!((o.dataflow, o.icr, o.psum_capacity), (Dataflow::Medium, true, None));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Input(anyhow!("x")).exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 1);
        assert_eq!(CliError::Internal(anyhow!("x")).exit_code(), 1);
    }

    #[test]
    fn plateau_marks_first_stable_capacity() {
        let m = synth::fanin(40);
        let cfg = RunConfig { ideal_mode: true, n_log2: 3, ..RunConfig::default() };
        let rows = sweep_psum(&m, &Rhs::ones(41), &cfg, &[0, 1, 2, 4, 8], "f").unwrap();
        assert_eq!(rows.iter().filter(|r| r.plateau).count(), 1);
        let at = rows.iter().position(|r| r.plateau).unwrap();
        assert!(rows[at..].iter().all(|r| r.blocking_cycles == rows[4].blocking_cycles));
        assert_eq!(rows[0].normalized_cycles, 1.0);
    }

    #[test]
    fn dataflow_example_row() {
        let cfg = RunConfig { ideal_mode: true, ..RunConfig::default() };
        let row = compare_dataflow_example(&cfg).unwrap();
        assert_eq!((row.coarse_cycles, row.medium_cycles), (12, 8));
        assert!(compare_dataflow_example(&RunConfig::default()).is_err());
    }

    #[test]
    fn diagonal_variants_agree() {
        let m = synth::diagonal(200);
        let row = compare_matrix(&m, &Rhs::ones(200), &RunConfig::default(), "diag").unwrap();
        assert_eq!(row.coarse_cycles, row.medium_cycles);
        assert_eq!(row.medium_cycles, row.medium_psum_icr_cycles);
        assert_eq!(row.coarse_gops, row.medium_psum_gops);
    }

    #[test]
    fn chain_medium_not_slower() {
        let m = synth::chain(50);
        let row = compare_matrix(&m, &Rhs::ones(50), &RunConfig::default(), "chain").unwrap();
        assert!(row.medium_gops >= row.coarse_gops);
    }

    #[test]
    fn csv_has_header() {
        let rows = sweep_psum(&synth::chain(5), &Rhs::ones(5), &RunConfig::default(), &[0, 8], "c").unwrap();
        let text = to_csv(&rows).unwrap();
        assert!(text.starts_with("capacity,total_cycles,blocking_cycles,normalized_cycles,normalized_blocking,plateau\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn generator_shapes() {
        let p = GenParams { n: 5, density: 0.05, max_indegree: 8, window: 256, seed: 42 };
        assert_eq!(cmd_gen(GenKind::Chain, &p).unwrap(), synth::chain(5));
        let f = cmd_gen(GenKind::Fanin, &p).unwrap();
        assert_eq!(f.off_diagonal(5).0, &[0, 1, 2, 3, 4]);
        let p = GenParams { n: 100, ..p };
        assert_eq!(cmd_gen(GenKind::RandomLower, &p).unwrap(), cmd_gen(GenKind::RandomLower, &p).unwrap());
        let bad = GenParams { density: 1.5, ..p };
        assert_eq!(cmd_gen(GenKind::RandomLower, &bad).unwrap_err().exit_code(), 2);
    }
}
