use crate::graph::SolveDag;
use crate::sched::{Action, NopTag, Schedule};

use super::BankAssignment;

#[derive(Default)]
struct SubCycle {
    /// (bank, source) pairs being read.
    reads: Vec<(u32, u32)>,
    /// Banks receiving a completed value.
    writes: Vec<u32>,
    execs: Vec<usize>,
}

impl SubCycle {
    fn admits(&self, read: Option<(u32, u32)>, write: Option<u32>) -> bool {
        let read_ok = read.is_none_or(|(b, s)| self.reads.iter().all(|&(rb, rs)| rb != b || rs == s));
        let write_ok = write.is_none_or(|b| !self.writes.contains(&b));
        read_ok && write_ok
    }
}

/// Splits every cycle whose bank accesses collide into conflict-free sub-cycles.
///
/// Executes are placed first-fit in ascending CU order, so the lowest CU goes
/// first. A CU waiting for a later sub-cycle, and every CU in the added
/// sub-cycles that is not executing, gets `Bnop`. Returns the new schedule and
/// the number of cycles added.
pub fn resolve_conflicts(s: &Schedule, d: &SolveDag, banks: &BankAssignment) -> (Schedule, usize) {
    let p = s.cus();
    let mut actions = Vec::with_capacity(s.actions().len());
    let mut completion = s.node_completion_cycle().to_vec();
    let mut added = 0;
    let mut subs: Vec<SubCycle> = Vec::new();

    for c in 0..s.total_cycles() {
        let cycle = s.cycle(c);
        let access = |a: &Action| {
            let e = a.exec()?;
            Some(match e.edge {
                Some(edge) => {
                    let src = d.edge_source(edge as usize);
                    (Some((banks.bank[src as usize], src)), None)
                }
                None => (None, Some(banks.bank[e.node as usize])),
            })
        };
        subs.clear();
        for (cu, a) in cycle.iter().enumerate() {
            let Some((read, write)) = access(a) else { continue };
            let k = match subs.iter().position(|sc| sc.admits(read, write)) {
                Some(k) => k,
                None => {
                    subs.push(SubCycle::default());
                    subs.len() - 1
                }
            };
            let sc = &mut subs[k];
            sc.reads.extend(read);
            sc.writes.extend(write);
            sc.execs.push(cu);
        }

        if subs.len() <= 1 {
            actions.extend_from_slice(cycle);
            for e in cycle.iter().filter_map(Action::exec).filter(|e| e.is_update()) {
                completion[e.node as usize] = Some((actions.len() / p - 1) as u32);
            }
            continue;
        }
        added += subs.len() - 1;
        for (k, sc) in subs.iter().enumerate() {
            let base = actions.len();
            for a in cycle {
                let keep_nop = k == 0 && a.exec().is_none();
                actions.push(if keep_nop { *a } else { Action::Nop(NopTag::Bnop) });
            }
            for &cu in &sc.execs {
                actions[base + cu] = cycle[cu];
                if let Some(e) = cycle[cu].exec().filter(|e| e.is_update()) {
                    completion[e.node as usize] = Some((base / p) as u32);
                }
            }
        }
    }
    (Schedule::from_parts(p, actions, completion, s.assignment().to_vec()), added)
}
