use std::collections::{BTreeSet, VecDeque};

use crate::arch::ArchConfig;
use crate::graph::SolveDag;

use super::icr::IcrWorkspace;
use super::{
    apply_psum_rules, Action, Allocation, Candidate, Exec, NopTag, PsumDst, PsumOutcome, Schedule,
    ScheduleError,
};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    New,
    Started,
    Done,
}

struct Cu {
    tasks: Vec<u32>,
    /// Position of the first never-started task.
    first_new: usize,
    /// Positions of never-started tasks that have something computable.
    ready_new: BTreeSet<usize>,
    /// Node whose partial sum sits in the feedback register.
    feedback: Option<u32>,
    file: Vec<u32>,
    last_exec: Option<usize>,
    remaining: usize,
}

enum Pick {
    Exec { node: u32, cand: Candidate },
    Nop(NopTag),
}

/// Medium-granularity dataflow: any edge whose source is available may run,
/// with interrupted partial sums parked in the psum file.
///
/// Returns the shortest of [`medium_candidates`] (ties: fewer nops other than
/// Lnop, then the larger psum limit).
pub fn schedule_medium(
    d: &SolveDag,
    cfg: &ArchConfig,
    alloc: &Allocation,
    icr_on: bool,
    psum_capacity: Option<usize>,
) -> Result<Schedule, ScheduleError> {
    let key = |s: &Schedule| (s.total_cycles(), s.nop_counts()[..3].iter().sum::<usize>());
    let candidates = medium_candidates(d, cfg, alloc, icr_on, psum_capacity)?;
    let best = candidates.iter().enumerate().min_by_key(|(i, s)| (key(s), *i)).map(|(i, _)| i).expect("at least one limit");
    Ok(candidates.into_iter().nth(best).expect("index in range"))
}

/// Greedy list scheduling is not monotone in resources: skipping ahead can
/// delay a critical node. A schedule that uses fewer psum slots is valid on a
/// larger file, so the greedy pass runs at the full capacity, the powers of two
/// below it and 0, in that order. Every result is a valid schedule for the
/// given capacity.
///
/// The psum rules only distinguish 0, 1 and 2+ free slots, so a pass whose file
/// never held more than `u` entries equals every pass at limits `u + 2` and up;
/// those duplicates are skipped.
pub fn medium_candidates(
    d: &SolveDag,
    cfg: &ArchConfig,
    alloc: &Allocation,
    icr_on: bool,
    psum_capacity: Option<usize>,
) -> Result<Vec<Schedule>, ScheduleError> {
    let mut out = Vec::new();
    let mut same_from = usize::MAX;
    for limit in psum_limits(psum_capacity.unwrap_or_else(|| cfg.psum_words())) {
        if limit >= same_from {
            continue;
        }
        let (s, peak) = medium_pass(d, cfg, alloc, icr_on, limit)?;
        same_from = peak + 2;
        out.push(s);
    }
    Ok(out)
}

/// The psum limits tried for a file of `cap` slots, largest first.
pub fn psum_limits(cap: usize) -> Vec<usize> {
    let mut limits: Vec<usize> =
        std::iter::successors(Some(1usize), |&l| l.checked_mul(2)).take_while(|&l| l < cap).collect();
    if cap > 0 {
        limits.insert(0, 0);
    }
    limits.push(cap);
    limits.reverse();
    limits
}

/// One greedy pass using at most `cap` psum slots; also returns the largest
/// psum-file occupancy reached.
pub fn medium_pass(
    d: &SolveDag,
    cfg: &ArchConfig,
    alloc: &Allocation,
    icr_on: bool,
    cap: usize,
) -> Result<(Schedule, usize), ScheduleError> {
    let n = d.node_count();
    let p = alloc.cus;
    let latency = cfg.availability_latency();

    let mut status = vec![Status::New; n];
    let mut remaining: Vec<usize> = (0..n).map(|v| d.indegree(v)).collect();
    let mut ready: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut completion: Vec<Option<u32>> = vec![None; n];
    let mut pos = vec![0usize; n];

    let mut cus: Vec<Cu> = alloc
        .tasks
        .iter()
        .map(|t| Cu {
            tasks: t.clone(),
            first_new: 0,
            ready_new: BTreeSet::new(),
            feedback: None,
            file: Vec::new(),
            last_exec: None,
            remaining: t.len(),
        })
        .collect();
    for cu in &cus {
        for (i, &v) in cu.tasks.iter().enumerate() {
            pos[v as usize] = i;
        }
    }

    let mut events: VecDeque<(u32, u32)> = VecDeque::new();
    let mut outstanding = 0usize;
    for v in 0..n {
        if alloc.presolved[v] {
            status[v] = Status::Done;
            events.push_back((0, v as u32));
        } else {
            outstanding += 1;
            if remaining[v] == 0 {
                cus[alloc.assignment[v]].ready_new.insert(pos[v]);
            }
        }
    }

    let mut actions: Vec<Action> = Vec::new();
    let mut picks: Vec<Pick> = Vec::with_capacity(p);
    let mut edge_cus: Vec<usize> = Vec::new();
    let mut edge_cands: Vec<Vec<u32>> = Vec::new();
    let mut icr = IcrWorkspace::new(if icr_on { n } else { 0 });
    let mut peak = 0usize;
    let mut cycle: u32 = 0;

    while outstanding > 0 {
        while let Some(&(t, u)) = events.front() {
            if t > cycle {
                break;
            }
            events.pop_front();
            let u = u as usize;
            for (&v, &e) in d.successors(u).iter().zip(d.successor_edges(u)) {
                let v = v as usize;
                ready[v].push(e);
                if status[v] == Status::New {
                    cus[alloc.assignment[v]].ready_new.insert(pos[v]);
                }
            }
        }

        let unblocked = |v: usize, status: &[Status], ready: &[Vec<u32>], remaining: &[usize]| {
            status[v] != Status::Done && (!ready[v].is_empty() || remaining[v] == 0)
        };

        picks.clear();
        for cu in cus.iter_mut() {
            while cu.first_new < cu.tasks.len() && status[cu.tasks[cu.first_new] as usize] != Status::New {
                cu.first_new += 1;
            }
            let cached = cu
                .file
                .iter()
                .copied()
                .filter(|&v| unblocked(v as usize, &status, &ready, &remaining))
                .min();
            let pick = if let Some(v) = cached {
                Pick::Exec { node: v, cand: Candidate::Cached }
            } else if let Some(v) = cu.feedback.filter(|&v| unblocked(v as usize, &status, &ready, &remaining)) {
                Pick::Exec { node: v, cand: Candidate::Same }
            } else {
                match cu.ready_new.first().copied() {
                    Some(i) => Pick::Exec { node: cu.tasks[i], cand: Candidate::New { first_new: i == cu.first_new } },
                    None if cu.remaining == 0 => Pick::Nop(NopTag::Lnop),
                    None => Pick::Nop(NopTag::Dnop),
                }
            };
            let pick = match pick {
                Pick::Exec { node, cand } => {
                    let free = cap.saturating_sub(cu.file.len());
                    match apply_psum_rules(cu.feedback.is_some() && cand != Candidate::Same, cand, free) {
                        PsumOutcome::Proceed(_) => Pick::Exec { node, cand },
                        PsumOutcome::Blocked => Pick::Nop(NopTag::Pnop),
                    }
                }
                nop => nop,
            };
            picks.push(pick);
        }

        edge_cus.clear();
        edge_cands.clear();
        for (i, pick) in picks.iter().enumerate() {
            if let Pick::Exec { node, .. } = *pick {
                let r = &ready[node as usize];
                if !r.is_empty() {
                    edge_cus.push(i);
                    edge_cands.push(r.iter().map(|&e| d.edge_source(e as usize)).collect());
                }
            }
        }
        let chosen: Vec<u32> = if icr_on {
            icr.select(&edge_cands)
        } else {
            edge_cands.iter().map(|c| *c.iter().min().expect("non-empty")).collect()
        };

        let base = actions.len();
        let mut executed = false;
        let mut next_edge = 0;
        for (i, pick) in picks.iter().enumerate() {
            let (node, cand) = match *pick {
                Pick::Nop(tag) => {
                    actions.push(Action::Nop(tag));
                    continue;
                }
                Pick::Exec { node, cand } => (node, cand),
            };
            executed = true;
            let v = node as usize;
            let cu = &mut cus[i];
            let prev_unsolved = cu.feedback.is_some() && cand != Candidate::Same;
            let PsumOutcome::Proceed(tr) = apply_psum_rules(prev_unsolved, cand, usize::MAX) else {
                unreachable!("capacity checked during selection")
            };
            let mut cache = None;
            if tr.read_cur {
                let slot = cu.file.iter().position(|&x| x == node).expect("cached node in file");
                cu.file.swap_remove(slot);
            }
            if tr.write_prev {
                let prev = cu.feedback.take().expect("feedback holds the previous node");
                cu.file.push(prev);
                peak = peak.max(cu.file.len());
                cache = Some(prev);
                if let Some(Action::Exec(e)) = cu.last_exec.map(|k| &mut actions[k]) {
                    e.psum_dst = PsumDst::File;
                }
            }
            if let Candidate::New { .. } = cand {
                status[v] = Status::Started;
                cu.ready_new.remove(&pos[v]);
            }

            let edge = if ready[v].is_empty() {
                None
            } else {
                debug_assert_eq!(edge_cus[next_edge], i);
                let src = chosen[next_edge];
                next_edge += 1;
                let k = ready[v].iter().position(|&e| d.edge_source(e as usize) == src).expect("chosen edge");
                let e = ready[v].swap_remove(k);
                remaining[v] -= 1;
                Some(e)
            };
            let psum_dst = if edge.is_some() {
                cu.feedback = Some(node);
                PsumDst::Feedback
            } else {
                cu.feedback = None;
                status[v] = Status::Done;
                completion[v] = Some(cycle);
                cu.remaining -= 1;
                outstanding -= 1;
                events.push_back((cycle + latency, node));
                PsumDst::Done
            };
            cu.last_exec = Some(base + i);
            actions.push(Action::Exec(Exec { node, edge, psum_src: tr.src, psum_dst, cache }));
        }

        if !executed && events.is_empty() {
            return Err(ScheduleError::Deadlock { cycle, incomplete: outstanding });
        }
        cycle += 1;
    }

    // Trailing cycles where nobody executed add nothing.
    while actions.len() >= p && actions[actions.len() - p..].iter().all(|a| a.exec().is_none()) {
        actions.truncate(actions.len() - p);
    }
    Ok((Schedule::from_parts(p, actions, completion, alloc.assignment.clone()), peak))
}
