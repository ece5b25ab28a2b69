//! Cycle-by-cycle scheduling of the solve DAG onto the CU array.
//!
//! Nodes are allocated whole to CUs. The medium dataflow then executes any
//! input edge of an allocated node as soon as its source is available, caching
//! interrupted partial sums in the per-CU psum file. The coarse dataflow is the
//! baseline where a node starts only once every predecessor is solved.

mod alloc;
mod coarse;
mod icr;
mod medium;
mod psum;

pub use alloc::{allocate_nodes, Allocation};
pub use coarse::schedule_coarse;
pub use icr::icr_select;
pub use medium::{medium_candidates, medium_pass, psum_limits, schedule_medium};
pub use psum::{apply_psum_rules, Candidate, PsumOutcome, PsumTransition};

use serde::Serialize;
use thiserror::Error;

use crate::graph::SolveDag;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("deadlock at cycle {cycle}: {incomplete} nodes incomplete and no CU can progress")]
    Deadlock { cycle: u32, incomplete: usize },
    #[error("invalid allocation: {0}")]
    Allocation(String),
}

/// Where the PE takes its partial-sum operand from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PsumSrc {
    Zero,
    Feedback,
    File,
}

/// Where the PE result of an execute ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PsumDst {
    /// Consumed by this CU's next execute through the feedback register.
    Feedback,
    /// Written to the psum file by this CU's next execute.
    File,
    /// Final solution value.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NopTag {
    /// Bank conflict or register-port stall.
    Bnop,
    /// psum file capacity.
    Pnop,
    /// Owned nodes remain but none is computable.
    Dnop,
    /// All owned nodes are complete.
    Lnop,
}

impl NopTag {
    pub const ALL: [NopTag; 4] = [NopTag::Bnop, NopTag::Pnop, NopTag::Dnop, NopTag::Lnop];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exec {
    pub node: u32,
    /// Input edge being accumulated; `None` for the final b-update.
    pub edge: Option<u32>,
    pub psum_src: PsumSrc,
    pub psum_dst: PsumDst,
    /// Node whose partial sum (held in the feedback register) is written to the psum file this cycle.
    pub cache: Option<u32>,
}

impl Exec {
    pub fn is_update(&self) -> bool {
        self.edge.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Exec(Exec),
    Nop(NopTag),
}

impl Action {
    pub fn exec(&self) -> Option<&Exec> {
        match self {
            Action::Exec(e) => Some(e),
            Action::Nop(_) => None,
        }
    }
}

/// Per-cycle, per-CU action trace.
#[derive(Debug, Clone)]
pub struct Schedule {
    cus: usize,
    actions: Vec<Action>,
    /// Completion cycle per node; `None` for pre-solved nodes.
    completion: Vec<Option<u32>>,
    assignment: Vec<usize>,
}

impl Schedule {
    pub(crate) fn from_parts(
        cus: usize,
        actions: Vec<Action>,
        completion: Vec<Option<u32>>,
        assignment: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(actions.len() % cus.max(1), 0);
        Self { cus, actions, completion, assignment }
    }

    pub fn cus(&self) -> usize {
        self.cus
    }

    pub fn total_cycles(&self) -> usize {
        self.actions.len() / self.cus
    }

    pub fn cycle(&self, c: usize) -> &[Action] {
        &self.actions[c * self.cus..(c + 1) * self.cus]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn node_completion_cycle(&self) -> &[Option<u32>] {
        &self.completion
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn execute_count(&self) -> usize {
        self.actions.iter().filter(|a| a.exec().is_some()).count()
    }

    pub fn nop_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for a in &self.actions {
            if let Action::Nop(t) = a {
                counts[t.index()] += 1;
            }
        }
        counts
    }

    /// Checks the structural invariants every schedule must satisfy.
    ///
    /// Each edge executes once, after its source is available; each node gets
    /// exactly one b-update, as its last execute, on its assigned CU.
    pub fn validate(&self, d: &SolveDag, latency: u32) -> Result<(), String> {
        let n = d.node_count();
        let mut edge_done = vec![false; d.edge_count()];
        let mut updated = vec![false; n];
        let mut completion = vec![None; n];
        for c in 0..self.total_cycles() {
            for (cu, a) in self.cycle(c).iter().enumerate() {
                let Some(e) = a.exec() else { continue };
                let v = e.node as usize;
                if self.assignment[v] != cu {
                    return Err(format!("node {v} executed on CU {cu}, assigned to {}", self.assignment[v]));
                }
                if updated[v] {
                    return Err(format!("node {v} executes after its b-update (cycle {c})"));
                }
                match e.edge {
                    Some(edge) => {
                        let edge = edge as usize;
                        if d.edge_target(edge) as usize != v {
                            return Err(format!("edge {edge} does not feed node {v}"));
                        }
                        if std::mem::replace(&mut edge_done[edge], true) {
                            return Err(format!("edge {edge} executed twice"));
                        }
                        let src = d.edge_source(edge) as usize;
                        // Pre-solved sources are available from cycle 0; the
                        // recorded completion cycles are cross-checked below.
                        if let Some(t) = self.completion[src] {
                            if (c as u32) < t + latency {
                                return Err(format!(
                                    "edge {edge} at cycle {c} reads node {src} completed at {t}"
                                ));
                            }
                        }
                    }
                    None => {
                        if d.in_edges(v).any(|e| !edge_done[e]) {
                            return Err(format!("node {v} updated with pending edges"));
                        }
                        updated[v] = true;
                        completion[v] = Some(c as u32);
                    }
                }
            }
        }
        for v in 0..n {
            if self.is_presolved(v) {
                continue;
            }
            if !updated[v] {
                return Err(format!("node {v} never completed"));
            }
            if completion[v] != self.completion[v] {
                return Err(format!("node {v} completion cycle mismatch"));
            }
        }
        Ok(())
    }

    fn is_presolved(&self, v: usize) -> bool {
        self.completion[v].is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dataflow {
    Medium,
    Coarse,
}

/// Knobs for one scheduling run.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleOptions {
    pub dataflow: Dataflow,
    pub icr: bool,
    /// psum file capacity; `None` uses the architecture's `2^K` words.
    pub psum_capacity: Option<usize>,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { dataflow: Dataflow::Medium, icr: true, psum_capacity: None }
    }
}

pub fn schedule(
    d: &SolveDag,
    cfg: &crate::arch::ArchConfig,
    alloc: &Allocation,
    opts: &ScheduleOptions,
) -> Result<Schedule, ScheduleError> {
    match opts.dataflow {
        Dataflow::Medium => schedule_medium(d, cfg, alloc, opts.icr, opts.psum_capacity),
        Dataflow::Coarse => schedule_coarse(d, cfg, alloc),
    }
}

/// Every schedule the compiler may lower; [`schedule`] picks one of them.
pub fn schedule_candidates(
    d: &SolveDag,
    cfg: &crate::arch::ArchConfig,
    alloc: &Allocation,
    opts: &ScheduleOptions,
) -> Result<Vec<Schedule>, ScheduleError> {
    match opts.dataflow {
        Dataflow::Medium => medium_candidates(d, cfg, alloc, opts.icr, opts.psum_capacity),
        Dataflow::Coarse => Ok(vec![schedule_coarse(d, cfg, alloc)?]),
    }
}
