use crate::arch::ArchConfig;
use crate::graph::SolveDag;
use crate::isa::{CompileStats, CuInstruction, PeCtl, Program};
use crate::sched::{Action, NopTag, PsumSrc, Schedule};

use super::{BackendError, BankAssignment, RegisterPlan, XiWriteSrc};

const NONE: u32 = u32::MAX;

/// Builds the VLIW words, streams and nop tags for a conflict-free schedule
/// and its register plan.
#[allow(clippy::too_many_arguments)]
pub fn emit_program(
    s: &Schedule,
    d: &SolveDag,
    banks: &BankAssignment,
    plan: &RegisterPlan,
    rhs: &[f32],
    cfg: &ArchConfig,
    name: &str,
    stats: CompileStats,
) -> Result<Program, BackendError> {
    let p = s.cus();
    let n = d.node_count();
    let psum_cap = cfg.psum_words();
    let fb_select = CuInstruction::feedback_select(cfg.k_log2);

    let mut psum_slots = vec![vec![NONE; psum_cap]; p];
    let mut psum_slot_of = vec![NONE; n];
    let mut l_streams = vec![Vec::new(); p];
    let mut b_streams = vec![Vec::new(); p];
    let mut slices = Vec::with_capacity(plan.cycles.len() * p);
    let mut tags = Vec::with_capacity(plan.cycles.len() * p);

    for (mc_index, mc) in plan.cycles.iter().enumerate() {
        let base = slices.len();
        slices.resize(base + p, CuInstruction::default());
        match mc.origin {
            None => tags.extend(std::iter::repeat_n(Some(NopTag::Bnop), p)),
            Some(c) => {
                for (cu, a) in s.cycle(c).iter().enumerate() {
                    let e = match a {
                        Action::Nop(t) => {
                            tags.push(Some(*t));
                            continue;
                        }
                        Action::Exec(e) => e,
                    };
                    tags.push(None);
                    let v = e.node as usize;
                    let ins = &mut slices[base + cu];
                    match e.psum_src {
                        PsumSrc::Zero => {}
                        PsumSrc::Feedback => ins.psum_read_addr = fb_select,
                        PsumSrc::File => {
                            let slot = psum_slot_of[v];
                            if slot == NONE {
                                return Err(BackendError::Psum(format!("node {v} read from CU {cu}'s psum file but never cached")));
                            }
                            ins.psum_read_en = true;
                            ins.psum_read_addr = slot;
                            psum_slots[cu][slot as usize] = NONE;
                            psum_slot_of[v] = NONE;
                        }
                    }
                    if let Some(prev) = e.cache {
                        let slot = psum_slots[cu].iter().position(|&x| x == NONE).ok_or_else(|| {
                            BackendError::Psum(format!("CU {cu} psum file full at machine cycle {mc_index}"))
                        })?;
                        psum_slots[cu][slot] = prev;
                        psum_slot_of[prev as usize] = slot as u32;
                        ins.psum_write_en = true;
                    }
                    match e.edge {
                        Some(edge) => {
                            let edge = edge as usize;
                            ins.pe_ctl = PeCtl::Accumulate;
                            ins.in_valid = true;
                            ins.in_sel = banks.bank[d.edge_source(edge) as usize];
                            l_streams[cu].push(d.edge_value(edge));
                        }
                        None => {
                            ins.pe_ctl = PeCtl::Update;
                            ins.out_valid = true;
                            ins.out_sel = banks.bank[v];
                            l_streams[cu].push(1.0 / d.diagonal(v));
                            b_streams[cu].push(rhs[v]);
                        }
                    }
                }
            }
        }
        for &(b, ops) in &mc.banks {
            let ins = &mut slices[base + b as usize];
            if let Some(slot) = ops.read {
                ins.xi_read_en = true;
                ins.xi_read_addr = slot;
            }
            if let Some(slot) = ops.release {
                debug_assert!(ops.read.is_none_or(|r| r == slot));
                ins.xi_release = true;
                ins.xi_read_addr = slot;
            }
            match ops.write {
                Some((_, XiWriteSrc::Crossbar)) => ins.xi_write_en = true,
                Some((_, XiWriteSrc::Reload { dm_addr })) => {
                    ins.xi_write_en = true;
                    ins.s34 |= 1;
                    ins.dm_read_en = true;
                    ins.dm_read_addr = dm_addr;
                }
                None => {}
            }
            ins.dm_write_en = ops.dm_write;
        }
    }

    Ok(Program::from_slices(
        *cfg,
        name.to_string(),
        n,
        n + d.edge_count(),
        stats,
        &slices,
        tags,
        l_streams,
        b_streams,
        plan.out_perm.clone(),
    )?)
}
