//! End-to-end compile: matrix to DAG, schedule, backend and program.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::arch::ArchConfig;
use crate::backend::{self, BackendError};
use crate::graph::{build_dag, dag_metrics, DagMetrics, SolveDag};
use crate::isa::{IsaError, Program, SliceLayout};
use crate::matrix::{CsrMatrix, MatrixError, Rhs};
use crate::sched::{self, allocate_nodes, Dataflow, Schedule, ScheduleError, ScheduleOptions};
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Isa(#[from] IsaError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub fn check_config(cfg: &ArchConfig, opts: &ScheduleOptions) -> Result<(), Error> {
    if cfg.n_log2 > 10 {
        return Err(Error::Config(format!("N={} is beyond the supported 1024 CUs", cfg.n_log2)));
    }
    if cfg.m_log2 == 0 || cfg.k_log2 == 0 {
        return Err(Error::Config("M and K must be at least 1".into()));
    }
    if SliceLayout::new(cfg).width() > 128 {
        return Err(Error::Config("instruction slice wider than 128 bits".into()));
    }
    if cfg.clock_hz.is_nan() || cfg.clock_hz <= 0.0 {
        return Err(Error::Config("clock must be positive".into()));
    }
    if let Some(c) = opts.psum_capacity {
        if c > cfg.psum_words() {
            return Err(Error::Config(format!("psum capacity {c} exceeds the {}-word file", cfg.psum_words())));
        }
    }
    Ok(())
}

/// Schedule only, for cycle-count analysis. Ideal mode is allowed here.
pub fn schedule_matrix(m: &CsrMatrix, cfg: &ArchConfig, opts: &ScheduleOptions) -> Result<(SolveDag, Schedule), Error> {
    check_config(cfg, opts)?;
    let d = build_dag(m);
    let alloc = allocate_nodes(&d, cfg);
    let s = sched::schedule(&d, cfg, &alloc, opts)?;
    Ok((d, s))
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub program: Program,
    /// Cycles of the schedule before bank-conflict and register stalls.
    pub schedule_cycles: usize,
    pub metrics: DagMetrics,
    pub compile_seconds: f64,
}

pub fn compile(m: &CsrMatrix, rhs: &Rhs, cfg: &ArchConfig, opts: &ScheduleOptions, name: &str) -> Result<Compiled, Error> {
    if cfg.ideal_mode {
        return Err(Error::Config("ideal mode is for schedule analysis only; it cannot be compiled".into()));
    }
    if rhs.len() != m.n() {
        return Err(MatrixError::RhsLength { expected: m.n(), found: rhs.len() }.into());
    }
    let start = Instant::now();
    check_config(cfg, opts)?;
    let d = build_dag(m);
    let alloc = allocate_nodes(&d, cfg);
    // Bank conflicts and register stalls are only known after lowering, so
    // every candidate schedule is lowered and the shortest program wins.
    let mut best: Option<(usize, usize, Program)> = None;
    for s in sched::schedule_candidates(&d, cfg, &alloc, opts)? {
        let program = backend::lower(&s, &d, rhs.as_slice(), cfg, name)?;
        if best.as_ref().is_none_or(|(cycles, _, _)| program.cycles() < *cycles) {
            best = Some((program.cycles(), s.total_cycles(), program));
        }
    }
    let (_, schedule_cycles, program) = best.expect("at least one candidate schedule");
    let compile_seconds = start.elapsed().as_secs_f64();
    let metrics = dag_metrics(m, &d, &alloc.assignment, cfg.cus(), cfg.clock_hz);
    Ok(Compiled { program, schedule_cycles, metrics, compile_seconds })
}

/// `compile` at each psum capacity in turn, sharing scheduler passes and
/// lowered programs between capacities. Each result has the cycle count
/// `compile` gives at that capacity; `compile_seconds` counts only the work
/// first done for that capacity.
pub fn compile_sweep(
    m: &CsrMatrix,
    rhs: &Rhs,
    cfg: &ArchConfig,
    opts: &ScheduleOptions,
    capacities: &[usize],
    name: &str,
) -> Result<Vec<Compiled>, Error> {
    let with_cap = |c: usize| ScheduleOptions { psum_capacity: Some(c), ..*opts };
    if opts.dataflow == Dataflow::Coarse {
        return capacities.iter().map(|&c| compile(m, rhs, cfg, &with_cap(c), name)).collect();
    }
    if cfg.ideal_mode {
        return Err(Error::Config("ideal mode is for schedule analysis only; it cannot be compiled".into()));
    }
    if rhs.len() != m.n() {
        return Err(MatrixError::RhsLength { expected: m.n(), found: rhs.len() }.into());
    }
    for &c in capacities {
        check_config(cfg, &with_cap(c))?;
    }
    let d = build_dag(m);
    let alloc = allocate_nodes(&d, cfg);
    let metrics = dag_metrics(m, &d, &alloc.assignment, cfg.cus(), cfg.clock_hz);
    // Limit -> (peak psum occupancy, index into `lowered`).
    let mut passes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut lowered: Vec<(usize, Program)> = Vec::new();
    let mut out = Vec::with_capacity(capacities.len());
    for &cap in capacities {
        let start = Instant::now();
        let mut best: Option<usize> = None;
        for limit in sched::psum_limits(cap) {
            let idx = if let Some(&(_, i)) = passes.get(&limit) {
                i
            } else {
                // A larger-limit pass whose file stayed two below `limit` is this pass.
                let same = passes.range(limit..).map(|(_, &v)| v).find(|&(peak, _)| peak + 2 <= limit);
                let entry = match same {
                    Some(v) => v,
                    None => {
                        let (s, peak) = sched::medium_pass(&d, cfg, &alloc, opts.icr, limit)?;
                        let program = backend::lower(&s, &d, rhs.as_slice(), cfg, name)?;
                        lowered.push((s.total_cycles(), program));
                        (peak, lowered.len() - 1)
                    }
                };
                passes.insert(limit, entry);
                entry.1
            };
            if best.is_none_or(|b| lowered[idx].1.cycles() < lowered[b].1.cycles()) {
                best = Some(idx);
            }
        }
        let (schedule_cycles, program) = lowered[best.expect("at least one limit")].clone();
        out.push(Compiled { program, schedule_cycles, metrics, compile_seconds: start.elapsed().as_secs_f64() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{max_relative_error, solve_dense_bruteforce, solve_serial};
    use crate::{sim, synth};

    fn run(m: &CsrMatrix, cfg: &ArchConfig) -> sim::SimReport {
        let rhs = Rhs::ones(m.n());
        let c = compile(m, &rhs, cfg, &ScheduleOptions::default(), "t").unwrap();
        c.program.check_streams().unwrap();
        let r = sim::run(&c.program).unwrap();
        let (err, _) = max_relative_error(&r.x, &solve_serial(m, &rhs).0);
        assert!(err <= 1e-5, "error {err}");
        r
    }

    #[test]
    fn identity() {
        let r = run(&synth::diagonal(5), &ArchConfig::default());
        assert_eq!(r.x, vec![1.0; 5]);
        assert_eq!(r.breakdown.exec, 5);
        assert_eq!(r.total_cycles, 1);
    }

    #[test]
    fn bidiagonal() {
        let m = synth::chain(5);
        let r = run(&m, &ArchConfig::default());
        let dense = solve_dense_bruteforce(&m, &Rhs::ones(5)).unwrap();
        assert_eq!(r.x, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(r.x, dense.0);
    }

    #[test]
    fn small_configs() {
        let m = synth::random_lower(300, 0.05, 7);
        for cfg in [
            ArchConfig { n_log2: 2, m_log2: 2, k_log2: 1, t_log2: 7, ..ArchConfig::default() },
            ArchConfig { n_log2: 3, m_log2: 1, k_log2: 2, t_log2: 6, ..ArchConfig::default() },
            ArchConfig { n_log2: 0, t_log2: 9, ..ArchConfig::default() },
        ] {
            let r = run(&m, &cfg);
            assert_eq!(r.breakdown.total(), r.total_cycles * cfg.cus() as u64);
            assert_eq!(r.breakdown.exec as usize, m.nnz());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let m = synth::diagonal(3);
        let rhs = Rhs::ones(3);
        let ideal = ArchConfig { ideal_mode: true, ..ArchConfig::default() };
        assert!(matches!(compile(&m, &rhs, &ideal, &ScheduleOptions::default(), "t"), Err(Error::Config(_))));
        let opts = ScheduleOptions { psum_capacity: Some(9), ..Default::default() };
        assert!(matches!(compile(&m, &rhs, &ArchConfig::default(), &opts, "t"), Err(Error::Config(_))));
        let tiny = ArchConfig { n_log2: 0, t_log2: 1, ..ArchConfig::default() };
        assert!(matches!(compile(&m, &rhs, &tiny, &ScheduleOptions::default(), "t"), Err(Error::Backend(_))));
    }
}
