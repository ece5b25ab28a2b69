use crate::arch::ArchConfig;
use crate::graph::SolveDag;
use crate::sched::Schedule;

use super::{BackendError, BankAssignment};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiWriteSrc {
    /// Result arriving through the output crossbar.
    Crossbar,
    /// Reload from this bank's data memory.
    Reload { dm_addr: u32 },
}

/// What one bank's x_i file and data memory do in one machine cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BankOps {
    pub read: Option<u32>,
    /// Slot invalidated this cycle; equals `read` when both are set.
    pub release: Option<u32>,
    /// Slot written (always the lowest free one after releases).
    pub write: Option<(u32, XiWriteSrc)>,
    pub dm_write: bool,
}

impl BankOps {
    fn is_idle(&self) -> bool {
        *self == BankOps::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineCycle {
    /// Schedule cycle executed here; `None` for an inserted stall cycle.
    pub origin: Option<usize>,
    /// Non-idle banks only, ascending.
    pub banks: Vec<(u32, BankOps)>,
}

#[derive(Debug, Clone, Default)]
pub struct RegisterPlan {
    pub cycles: Vec<MachineCycle>,
    pub out_perm: Vec<Vec<u32>>,
    pub reloads: usize,
    pub evictions: usize,
    pub stall_cycles: usize,
    pub max_residency: usize,
}

struct Banks<'a> {
    slots: Vec<Vec<u32>>,
    free: Vec<usize>,
    slot_of: Vec<u32>,
    reads_of: &'a [Vec<u32>],
    next_read: Vec<usize>,
}

impl Banks<'_> {
    fn release(&mut self, b: usize, v: u32) -> u32 {
        let s = self.slot_of[v as usize];
        debug_assert_ne!(s, NONE);
        self.slots[b][s as usize] = NONE;
        self.slot_of[v as usize] = NONE;
        self.free[b] += 1;
        s
    }

    fn write(&mut self, b: usize, v: u32) -> Result<u32, BackendError> {
        let s = self.slots[b].iter().position(|&x| x == NONE).ok_or_else(|| {
            BackendError::RegisterFile(format!("bank {b} has no free slot for node {v}"))
        })?;
        self.slots[b][s] = v;
        self.slot_of[v as usize] = s as u32;
        self.free[b] -= 1;
        Ok(s as u32)
    }

    /// Resident value with the furthest next read, ties to the lowest id.
    fn victim(&self, b: usize, exclude: &[u32]) -> Option<u32> {
        self.slots[b]
            .iter()
            .copied()
            .filter(|&v| v != NONE && !exclude.contains(&v))
            .max_by_key(|&v| (self.reads_of[v as usize][self.next_read[v as usize]], std::cmp::Reverse(v)))
    }
}

fn ops_for(ops: &mut Vec<(u32, BankOps)>, b: u32) -> &mut BankOps {
    let i = match ops.iter().position(|&(x, _)| x == b) {
        Some(i) => i,
        None => {
            ops.push((b, BankOps::default()));
            ops.len() - 1
        }
    };
    &mut ops[i].1
}

/// Assigns x_i slots to every read value, inserting evictions, reloads and
/// stall cycles so that each bank stays within `2^M` slots.
///
/// Every completed value is also written to its bank's data memory, so an
/// eviction only invalidates the slot and a reload reads the data memory.
pub fn allocate_registers(
    s: &Schedule,
    d: &SolveDag,
    banks: &BankAssignment,
    cfg: &ArchConfig,
) -> Result<RegisterPlan, BackendError> {
    let p = s.cus();
    let n = d.node_count();
    let cycles = s.total_cycles();
    let cap = cfg.xi_words();
    if cap < 2 {
        return Err(BackendError::RegisterFile("x_i files need at least two slots".into()));
    }

    let mut read_at: Vec<Vec<(u32, u32)>> = vec![Vec::new(); cycles];
    let mut write_at: Vec<Vec<(u32, u32)>> = vec![Vec::new(); cycles];
    let mut reads_of: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (c, (reads, writes)) in read_at.iter_mut().zip(write_at.iter_mut()).enumerate() {
        for e in s.cycle(c).iter().filter_map(|a| a.exec()) {
            match e.edge {
                Some(edge) => {
                    let u = d.edge_source(edge as usize);
                    if !reads.iter().any(|&(_, x)| x == u) {
                        reads.push((banks.bank[u as usize], u));
                        reads_of[u as usize].push(c as u32);
                    }
                }
                None => writes.push((banks.bank[e.node as usize], e.node)),
            }
        }
        reads.sort_unstable();
        writes.sort_unstable();
    }
    for c in 0..cycles {
        for w in read_at[c].windows(2) {
            if w[0].0 == w[1].0 {
                return Err(BackendError::RegisterFile(format!("cycle {c} reads two values from bank {}", w[0].0)));
            }
        }
    }

    let mut st = Banks {
        slots: vec![vec![NONE; cap]; p],
        free: vec![cap; p],
        slot_of: vec![NONE; n],
        reads_of: &reads_of,
        next_read: vec![0; n],
    };
    let mut dm_addr = vec![NONE; n];
    let mut plan = RegisterPlan { out_perm: vec![Vec::new(); p], ..Default::default() };

    for c in 0..cycles {
        let reads = &read_at[c];
        let writes = &write_at[c];
        let last_read = |u: u32, st: &Banks| st.next_read[u as usize] + 1 == reads_of[u as usize].len();

        // Stall until every value read in c is resident and every bank
        // written in c has a slot left after this cycle's releases.
        loop {
            // All releases of a stall cycle are decided before any slot is
            // written, matching the release-then-write order of the hardware.
            let mut ops: Vec<(u32, BankOps)> = Vec::new();
            let mut reload: Vec<(u32, u32)> = Vec::new();
            for &(b, u) in reads {
                if st.slot_of[u as usize] != NONE {
                    continue;
                }
                let bi = b as usize;
                let o = ops_for(&mut ops, b);
                if st.free[bi] == 0 {
                    let v = st.victim(bi, &[]).expect("full bank has residents");
                    o.release = Some(st.release(bi, v));
                    plan.evictions += 1;
                }
                reload.push((b, u));
            }
            for &(b, w) in writes {
                let bi = b as usize;
                if reads_of[w as usize].is_empty() {
                    continue;
                }
                let freed_by_read = reads.iter().any(|&(rb, u)| rb == b && st.slot_of[u as usize] != NONE && last_read(u, &st));
                let reloading = reload.iter().any(|&(rb, _)| rb == b) as usize;
                if st.free[bi] + freed_by_read as usize > reloading {
                    continue;
                }
                let o = ops_for(&mut ops, b);
                if o.release.is_some() {
                    continue; // next stall cycle
                }
                let keep: Vec<u32> = reads.iter().filter(|&&(rb, _)| rb == b).map(|&(_, u)| u).collect();
                let v = st.victim(bi, &keep).ok_or_else(|| {
                    BackendError::RegisterFile(format!("bank {b} cannot free a slot at cycle {c}"))
                })?;
                o.release = Some(st.release(bi, v));
                plan.evictions += 1;
            }
            for (b, u) in reload {
                let slot = st.write(b as usize, u)?;
                ops_for(&mut ops, b).write = Some((slot, XiWriteSrc::Reload { dm_addr: dm_addr[u as usize] }));
                plan.reloads += 1;
            }
            if ops.is_empty() {
                break;
            }
            ops.sort_unstable_by_key(|&(b, _)| b);
            plan.stall_cycles += 1;
            plan.cycles.push(MachineCycle { origin: None, banks: ops });
        }

        let mut ops: Vec<(u32, BankOps)> = Vec::new();
        for &(b, u) in reads {
            let slot = st.slot_of[u as usize];
            let o = ops_for(&mut ops, b);
            o.read = Some(slot);
            if last_read(u, &st) {
                st.release(b as usize, u);
                o.release = Some(slot);
            }
            st.next_read[u as usize] += 1;
        }
        let mut write_busy = vec![false; p];
        for &(b, w) in writes {
            write_busy[b as usize] = !reads_of[w as usize].is_empty();
        }

        // Just-in-time reloads for the next cycle, on idle write ports.
        let next_reads: &[(u32, u32)] = read_at.get(c + 1).map_or(&[], |r| r.as_slice());
        let mut reload: Vec<(u32, u32)> = Vec::new();
        for &(b, u) in next_reads {
            let resident = st.slot_of[u as usize] != NONE;
            let written_now = writes.iter().any(|&(_, w)| w == u);
            if resident || written_now || write_busy[b as usize] {
                continue;
            }
            let bi = b as usize;
            let o = ops_for(&mut ops, b);
            if st.free[bi] == 0 {
                // The address field is taken by this cycle's read.
                if o.release.is_some() || o.read.is_some() {
                    continue;
                }
                let Some(v) = st.victim(bi, &[]) else { continue };
                o.release = Some(st.release(bi, v));
                plan.evictions += 1;
            }
            reload.push((b, u));
            write_busy[bi] = true;
        }

        // Keep two slots in reserve where the address field is free.
        for b in 0..p {
            let demand = write_busy[b] as usize;
            if st.free[b] >= 2 + demand {
                continue;
            }
            let o = ops_for(&mut ops, b as u32);
            if o.release.is_some() || o.read.is_some() {
                continue;
            }
            let keep: Vec<u32> = next_reads.iter().filter(|&&(nb, _)| nb as usize == b).map(|&(_, u)| u).collect();
            if let Some(v) = st.victim(b, &keep) {
                o.release = Some(st.release(b, v));
                plan.evictions += 1;
            }
        }

        for &(b, w) in writes {
            let bi = b as usize;
            let o = ops_for(&mut ops, b);
            o.dm_write = true;
            dm_addr[w as usize] = plan.out_perm[bi].len() as u32;
            plan.out_perm[bi].push(w);
            if !reads_of[w as usize].is_empty() {
                o.write = Some((st.write(bi, w)?, XiWriteSrc::Crossbar));
            }
        }
        for (b, u) in reload {
            let slot = st.write(b as usize, u)?;
            ops_for(&mut ops, b).write = Some((slot, XiWriteSrc::Reload { dm_addr: dm_addr[u as usize] }));
            plan.reloads += 1;
        }

        ops.retain(|(_, o)| !o.is_idle());
        ops.sort_unstable_by_key(|&(b, _)| b);
        let resident = st.free.iter().map(|&f| cap - f).max().unwrap_or(0);
        plan.max_residency = plan.max_residency.max(resident);
        plan.cycles.push(MachineCycle { origin: Some(c), banks: ops });
    }
    Ok(plan)
}
