use crate::arch::ArchConfig;
use crate::graph::SolveDag;

use super::{Action, Allocation, Exec, NopTag, PsumDst, PsumSrc, Schedule, ScheduleError};

/// Coarse dataflow baseline: a CU starts its next task only when every
/// predecessor is available, then runs its edges back to back in ascending
/// source order followed by the b-update.
pub fn schedule_coarse(d: &SolveDag, cfg: &ArchConfig, alloc: &Allocation) -> Result<Schedule, ScheduleError> {
    let n = d.node_count();
    let p = alloc.cus;
    let latency = cfg.availability_latency();

    // Cycle from which each node's value can be read.
    let mut avail: Vec<Option<u32>> = (0..n).map(|v| alloc.presolved[v].then_some(0)).collect();
    let mut completion: Vec<Option<u32>> = vec![None; n];
    let mut next = vec![0usize; p];
    // (node, ordered edge ids, ops issued) of the node in flight per CU.
    let mut active: Vec<Option<(u32, Vec<u32>, usize)>> = vec![None; p];
    let mut outstanding = alloc.tasks.iter().map(Vec::len).sum::<usize>();
    let mut actions = Vec::new();
    let mut cycle = 0u32;
    let mut latest_avail = 0u32;

    while outstanding > 0 {
        let mut executed = false;
        let mut done_now = Vec::new();
        for cu in 0..p {
            if active[cu].is_none() && next[cu] < alloc.tasks[cu].len() {
                let v = alloc.tasks[cu][next[cu]] as usize;
                if d.predecessors(v).iter().all(|&u| avail[u as usize].is_some_and(|t| t <= cycle)) {
                    let mut edges: Vec<u32> = d.in_edges(v).map(|e| e as u32).collect();
                    edges.sort_by_key(|&e| d.edge_source(e as usize));
                    active[cu] = Some((v as u32, edges, 0));
                    next[cu] += 1;
                }
            }
            let Some((node, edges, issued)) = active[cu].as_mut() else {
                let tag = if next[cu] == alloc.tasks[cu].len() { NopTag::Lnop } else { NopTag::Dnop };
                actions.push(Action::Nop(tag));
                continue;
            };
            executed = true;
            let psum_src = if *issued == 0 { PsumSrc::Zero } else { PsumSrc::Feedback };
            let node = *node;
            if *issued < edges.len() {
                let e = edges[*issued];
                *issued += 1;
                actions.push(Action::Exec(Exec { node, edge: Some(e), psum_src, psum_dst: PsumDst::Feedback, cache: None }));
            } else {
                actions.push(Action::Exec(Exec { node, edge: None, psum_src, psum_dst: PsumDst::Done, cache: None }));
                done_now.push(node as usize);
                active[cu] = None;
            }
        }
        for v in done_now {
            completion[v] = Some(cycle);
            avail[v] = Some(cycle + latency);
            latest_avail = cycle + latency;
            outstanding -= 1;
        }
        if !executed && latest_avail <= cycle {
            return Err(ScheduleError::Deadlock { cycle, incomplete: outstanding });
        }
        cycle += 1;
    }
    Ok(Schedule::from_parts(p, actions, completion, alloc.assignment.clone()))
}
