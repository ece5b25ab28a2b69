//! Lowering of a schedule to a machine program: bank colouring, conflict
//! resolution, x_i register allocation and instruction emission.

mod coloring;
mod conflicts;
mod constraints;
mod emit;
mod regalloc;

pub use coloring::{color_banks, BankAssignment};
pub use conflicts::resolve_conflicts;
pub use constraints::{build_constraints, reuse_metric, ConstraintGraph};
pub use emit::emit_program;
pub use regalloc::{allocate_registers, BankOps, MachineCycle, RegisterPlan, XiWriteSrc};

use thiserror::Error;

use crate::arch::ArchConfig;
use crate::graph::SolveDag;
use crate::isa::{CompileStats, IsaError, Program};
use crate::sched::Schedule;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{n} values exceed the total data memory of {capacity} words")]
    DataMemory { n: usize, capacity: usize },
    #[error("register allocation failed: {0}")]
    RegisterFile(String),
    #[error("psum file: {0}")]
    Psum(String),
    #[error("cannot lower this schedule: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Isa(#[from] IsaError),
}

/// Runs every backend pass on a schedule of the full DAG.
pub fn lower(s: &Schedule, d: &SolveDag, rhs: &[f32], cfg: &ArchConfig, name: &str) -> Result<Program, BackendError> {
    if s.node_completion_cycle().iter().any(Option::is_none) {
        return Err(BackendError::Unsupported("pre-solved nodes have no producer".into()));
    }
    if s.cus() != cfg.cus() {
        return Err(BackendError::Unsupported(format!("schedule for {} CUs on a {}-CU machine", s.cus(), cfg.cus())));
    }
    if rhs.len() != d.node_count() {
        return Err(BackendError::Unsupported(format!("{} right-hand-side values for {} rows", rhs.len(), d.node_count())));
    }
    let graph = build_constraints(s, d);
    let banks = color_banks(&graph, cfg.cus(), cfg.dm_words())?;
    let (split, conflict_cycles) = resolve_conflicts(s, d, &banks);
    let plan = allocate_registers(&split, d, &banks, cfg)?;
    let stats = CompileStats {
        reuse: reuse_metric(s, d),
        constraints: graph.constraint_count() as u64,
        residual_conflicts: banks.residual_conflicts as u64,
        conflict_cycles: conflict_cycles as u64,
        stall_cycles: plan.stall_cycles as u64,
        reloads: plan.reloads as u64,
        evictions: plan.evictions as u64,
        max_residency: plan.max_residency as u64,
    };
    emit_program(&split, d, &banks, &plan, rhs, cfg, name, stats)
}
