use crate::arch::ArchConfig;
use crate::graph::SolveDag;

use super::ScheduleError;

/// Node-to-CU mapping plus each CU's ordered task list.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub cus: usize,
    pub assignment: Vec<usize>,
    pub tasks: Vec<Vec<u32>>,
    /// Nodes treated as solved before cycle 0; they appear in no task list.
    pub presolved: Vec<bool>,
}

/// Deals nodes round-robin to CUs in ascending id order, which is topological.
pub fn allocate_nodes(d: &SolveDag, cfg: &ArchConfig) -> Allocation {
    let p = cfg.cus();
    let n = d.node_count();
    let assignment: Vec<usize> = (0..n).map(|v| v % p).collect();
    let mut tasks = vec![Vec::with_capacity(n / p + 1); p];
    for v in 0..n {
        tasks[v % p].push(v as u32);
    }
    Allocation { cus: p, assignment, tasks, presolved: vec![false; n] }
}

impl Allocation {
    /// Explicit mapping, with optional pre-solved nodes excluded from execution.
    pub fn custom(
        d: &SolveDag,
        cus: usize,
        assignment: Vec<usize>,
        presolved: &[usize],
    ) -> Result<Self, ScheduleError> {
        let n = d.node_count();
        if assignment.len() != n {
            return Err(ScheduleError::Allocation(format!(
                "{} assignments for {n} nodes",
                assignment.len()
            )));
        }
        if let Some(v) = assignment.iter().position(|&cu| cu >= cus) {
            return Err(ScheduleError::Allocation(format!("node {v} mapped past CU {}", cus - 1)));
        }
        let mut pre = vec![false; n];
        for &v in presolved {
            if v >= n {
                return Err(ScheduleError::Allocation(format!("pre-solved node {v} out of range")));
            }
            pre[v] = true;
        }
        for v in 0..n {
            if pre[v] && d.predecessors(v).iter().any(|&u| !pre[u as usize]) {
                return Err(ScheduleError::Allocation(format!(
                    "pre-solved node {v} depends on an unsolved node"
                )));
            }
        }
        let mut tasks = vec![Vec::new(); cus];
        for v in 0..n {
            if !pre[v] {
                tasks[assignment[v]].push(v as u32);
            }
        }
        Ok(Self { cus, assignment, tasks, presolved: pre })
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }
}
