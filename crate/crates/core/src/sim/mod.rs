//! Cycle-level model of the CU array running a compiled program.
//!
//! Each cycle has four phases: register-file reads and crossbar exports, PE
//! evaluation, register-file and data-memory writes, and the feedback latch.
//! Any access the hardware could not perform aborts the run.

mod report;

pub use report::{breakdown, Breakdown, Shares, SimReport};

use thiserror::Error;

use crate::isa::{CuInstruction, PeCtl, Program};
use crate::sched::NopTag;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("cycle {cycle}, CU {cu}: {stream} stream underflow")]
    StreamUnderflow { cycle: usize, cu: usize, stream: &'static str },
    #[error("CU {cu}: {left} {stream} stream words never consumed")]
    StreamLeftover { cu: usize, stream: &'static str, left: usize },
    #[error("cycle {cycle}, CU {cu}: write to full {file} file")]
    RegisterFull { cycle: usize, cu: usize, file: &'static str },
    #[error("cycle {cycle}, CU {cu}: access to invalid {file} slot {slot}")]
    InvalidSlot { cycle: usize, cu: usize, file: &'static str, slot: u32 },
    #[error("cycle {cycle}: two results routed to bank {bank}")]
    Contention { cycle: usize, bank: usize },
    #[error("cycle {cycle}: result routed to bank {bank} is not stored")]
    DroppedValue { cycle: usize, bank: usize },
    #[error("cycle {cycle}, CU {cu}: {msg}")]
    Invalid { cycle: usize, cu: usize, msg: String },
    #[error("cycle {cycle}, CU {cu}: data memory overflow")]
    DataMemoryFull { cycle: usize, cu: usize },
    #[error("output reconstruction: {0}")]
    Output(String),
}

struct Cu {
    feedback: Option<f32>,
    psum: Vec<Option<f32>>,
    xi: Vec<Option<f32>>,
    xi_valid: usize,
    dm: Vec<f32>,
    l_pos: usize,
    b_pos: usize,
}

fn lowest_free(file: &[Option<f32>]) -> Option<usize> {
    file.iter().position(Option::is_none)
}

pub fn run(prog: &Program) -> Result<SimReport, SimError> {
    let cfg = prog.arch;
    let p = cfg.cus();
    let k = cfg.k_log2;
    let dm_cap = cfg.dm_words();
    let mut cus: Vec<Cu> = (0..p)
        .map(|_| Cu {
            feedback: None,
            psum: vec![None; cfg.psum_words()],
            xi: vec![None; cfg.xi_words()],
            xi_valid: 0,
            dm: Vec::new(),
            l_pos: 0,
            b_pos: 0,
        })
        .collect();

    let mut bd = Breakdown::default();
    let mut executes_per_cu = vec![0u64; p];
    let mut nops_per_cu = vec![0u64; p];
    let mut max_residency = 0usize;
    let mut reloads = 0u64;
    let mut ins: Vec<CuInstruction> = Vec::with_capacity(p);
    let mut export: Vec<Option<f32>> = vec![None; p];
    let mut operand: Vec<f32> = vec![0.0; p];
    let mut out: Vec<Option<f32>> = vec![None; p];
    let mut incoming: Vec<Option<f32>> = vec![None; p];

    for cycle in 0..prog.cycles() {
        prog.decode_cycle(cycle, &mut ins);
        let bad = |cu: usize, msg: &str| SimError::Invalid { cycle, cu, msg: msg.to_string() };

        // Tags and PE-side enables must agree with pe_ctl.
        for cu in 0..p {
            let i = &ins[cu];
            let executing = matches!(i.pe_ctl, PeCtl::Update | PeCtl::Accumulate);
            match (prog.tags[cycle * p + cu], executing) {
                (None, true) => {
                    bd.exec += 1;
                    executes_per_cu[cu] += 1;
                }
                (Some(t), false) => {
                    nops_per_cu[cu] += 1;
                    match t {
                        NopTag::Bnop => bd.bnop += 1,
                        NopTag::Pnop => bd.pnop += 1,
                        NopTag::Dnop => bd.dnop += 1,
                        NopTag::Lnop => bd.lnop += 1,
                    }
                }
                _ => return Err(bad(cu, "nop tag disagrees with pe_ctl")),
            }
            if i.pe_ctl == PeCtl::Reserved {
                return Err(bad(cu, "reserved pe_ctl"));
            }
            if !executing && (i.psum_read_en || i.psum_write_en || i.in_valid || i.out_valid) {
                return Err(bad(cu, "PE enables set on an idle PE"));
            }
            if i.pe_ctl == PeCtl::Update && (i.in_valid || !i.out_valid) {
                return Err(bad(cu, "update must drive the output and not the input crossbar"));
            }
            if i.pe_ctl == PeCtl::Accumulate && (!i.in_valid || i.out_valid) {
                return Err(bad(cu, "accumulate must take the input and not drive the output crossbar"));
            }
        }

        // Phase 1: x_i reads, psum operands, stream pops.
        for cu in 0..p {
            let i = ins[cu];
            let st = &mut cus[cu];
            export[cu] = None;
            if i.xi_read_en {
                let v = st.xi.get(i.xi_read_addr as usize).copied().flatten().ok_or(SimError::InvalidSlot {
                    cycle,
                    cu,
                    file: "x_i",
                    slot: i.xi_read_addr,
                })?;
                export[cu] = Some(v);
            }
            if i.pe_ctl == PeCtl::Nop {
                continue;
            }
            operand[cu] = if i.psum_read_en {
                let slot = i.psum_read_addr as usize;
                st.psum.get_mut(slot).and_then(Option::take).ok_or(SimError::InvalidSlot {
                    cycle,
                    cu,
                    file: "psum",
                    slot: i.psum_read_addr,
                })?
            } else if (i.psum_read_addr >> (k - 1)) & 1 == 1 {
                st.feedback.ok_or_else(|| bad(cu, "feedback operand before any PE result"))?
            } else {
                0.0
            };
        }

        // Phase 2: PE evaluation. Updates first so an accumulate may take a
        // same-cycle result through the bypass path.
        for pass in [PeCtl::Update, PeCtl::Accumulate] {
            for cu in 0..p {
                let i = ins[cu];
                if i.pe_ctl != pass {
                    out[cu] = if pass == PeCtl::Update { None } else { out[cu] };
                    continue;
                }
                let st = &mut cus[cu];
                let l = *prog.l_streams[cu]
                    .get(st.l_pos)
                    .ok_or(SimError::StreamUnderflow { cycle, cu, stream: "L" })?;
                st.l_pos += 1;
                out[cu] = Some(match pass {
                    PeCtl::Update => {
                        let b = *prog.b_streams[cu]
                            .get(st.b_pos)
                            .ok_or(SimError::StreamUnderflow { cycle, cu, stream: "b" })?;
                        st.b_pos += 1;
                        (b - operand[cu]) * l
                    }
                    _ => {
                        let src = i.in_sel as usize;
                        let x = export
                            .get(src)
                            .copied()
                            .flatten()
                            .or_else(|| out.get(src).copied().flatten().filter(|_| ins[src].pe_ctl == PeCtl::Update))
                            .ok_or_else(|| bad(cu, "no value on the selected input port"))?;
                        operand[cu] + l * x
                    }
                });
            }
        }

        // Phase 3: writes. Releases land before writes in every file.
        incoming.iter_mut().for_each(|v| *v = None);
        for cu in 0..p {
            let i = ins[cu];
            if i.out_valid {
                let dest = i.out_sel as usize;
                if dest >= p {
                    return Err(bad(cu, "output crossbar select out of range"));
                }
                if incoming[dest].replace(out[cu].expect("update produced a result")).is_some() {
                    return Err(SimError::Contention { cycle, bank: dest });
                }
            }
        }
        for cu in 0..p {
            let i = ins[cu];
            let st = &mut cus[cu];
            if i.psum_write_en {
                let prev = st.feedback.ok_or_else(|| bad(cu, "psum write with an empty feedback register"))?;
                let slot = lowest_free(&st.psum).ok_or(SimError::RegisterFull { cycle, cu, file: "psum" })?;
                st.psum[slot] = Some(prev);
            }
            if i.xi_release {
                let slot = i.xi_read_addr as usize;
                if st.xi.get_mut(slot).and_then(Option::take).is_none() {
                    return Err(SimError::InvalidSlot { cycle, cu, file: "x_i", slot: i.xi_read_addr });
                }
                st.xi_valid -= 1;
            }
            let mut consumed = false;
            if i.xi_write_en {
                let v = if i.s34 & 1 == 1 {
                    if !i.dm_read_en {
                        return Err(bad(cu, "reload without a data-memory read"));
                    }
                    reloads += 1;
                    *st.dm.get(i.dm_read_addr as usize).ok_or_else(|| bad(cu, "reload of an unwritten data-memory word"))?
                } else {
                    consumed = true;
                    incoming[cu].ok_or_else(|| bad(cu, "x_i write with nothing on the output crossbar"))?
                };
                let slot = lowest_free(&st.xi).ok_or(SimError::RegisterFull { cycle, cu, file: "x_i" })?;
                st.xi[slot] = Some(v);
                st.xi_valid += 1;
            }
            if i.dm_write_en {
                let v = if i.s34 & 2 == 2 {
                    export[cu].ok_or_else(|| bad(cu, "spill write without an x_i read"))?
                } else {
                    consumed = true;
                    incoming[cu].ok_or_else(|| bad(cu, "data-memory write with nothing on the output crossbar"))?
                };
                if st.dm.len() >= dm_cap {
                    return Err(SimError::DataMemoryFull { cycle, cu });
                }
                st.dm.push(v);
            }
            if incoming[cu].is_some() && !consumed {
                return Err(SimError::DroppedValue { cycle, bank: cu });
            }
            max_residency = max_residency.max(st.xi_valid);
        }

        // Phase 4: feedback latch.
        for cu in 0..p {
            if ins[cu].pe_ctl != PeCtl::Nop {
                cus[cu].feedback = out[cu];
            }
        }
    }

    for (cu, st) in cus.iter().enumerate() {
        for (stream, pos, len) in [("L", st.l_pos, prog.l_streams[cu].len()), ("b", st.b_pos, prog.b_streams[cu].len())] {
            if pos != len {
                return Err(SimError::StreamLeftover { cu, stream, left: len - pos });
            }
        }
    }

    let n = prog.n;
    let mut x = vec![f32::NAN; n];
    let mut seen = vec![false; n];
    let mut dm_writes = 0u64;
    for (cu, st) in cus.iter().enumerate() {
        let perm = &prog.out_perm[cu];
        if perm.len() != st.dm.len() {
            return Err(SimError::Output(format!("CU {cu} wrote {} words but the permutation lists {}", st.dm.len(), perm.len())));
        }
        dm_writes += st.dm.len() as u64;
        for (&row, &v) in perm.iter().zip(&st.dm) {
            let row = row as usize;
            if row >= n || std::mem::replace(&mut seen[row], true) {
                return Err(SimError::Output(format!("row {row} invalid or written twice")));
            }
            x[row] = v;
        }
    }
    if let Some(row) = seen.iter().position(|s| !s) {
        return Err(SimError::Output(format!("row {row} never written")));
    }

    let cycles = prog.cycles() as u64;
    let ops = (2 * prog.nnz - n) as f64;
    let throughput_gops = if cycles == 0 { 0.0 } else { ops / (cycles as f64 / cfg.clock_hz) / 1e9 };
    Ok(SimReport {
        total_cycles: cycles,
        executes_per_cu,
        nops_per_cu,
        breakdown: bd,
        throughput_gops,
        reuse: prog.stats.reuse,
        residual_conflicts: prog.stats.residual_conflicts,
        max_residency: max_residency as u64,
        dm_writes,
        reloads,
        x,
    })
}
