use std::path::Path;

use serde::Serialize;

use crate::arch::ArchConfig;
use crate::sched::NopTag;

use super::{CuInstruction, IsaError, PeCtl, SliceLayout};

const MAGIC: &[u8; 5] = b"SPTV1";
pub const VERSION: u16 = 1;
/// Words of instruction memory and of each stream memory.
pub const STREAM_CAPACITY: usize = 65536;

/// Compiler-side statistics carried with the program so `run` can report them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CompileStats {
    /// Register-file reads saved by grouping same-source reads in one cycle.
    pub reuse: u64,
    /// Edges of the bank constraint graph (same-cycle read pairs).
    pub constraints: u64,
    /// Constraint edges whose endpoints ended up in the same bank.
    pub residual_conflicts: u64,
    /// Extra cycles created by splitting conflicting cycles.
    pub conflict_cycles: u64,
    /// Cycles inserted to make room for register reloads.
    pub stall_cycles: u64,
    pub reloads: u64,
    pub evictions: u64,
    /// Peak number of valid slots in any one x_i file.
    pub max_residency: u64,
}

/// A compiled program: VLIW words, stream contents, output permutation and nop tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub arch: ArchConfig,
    pub name: String,
    pub n: usize,
    pub nnz: usize,
    pub stats: CompileStats,
    cycles: usize,
    words: Vec<u8>,
    pub l_streams: Vec<Vec<f32>>,
    pub b_streams: Vec<Vec<f32>>,
    /// Per CU, the row index of each data-memory write in write order.
    pub out_perm: Vec<Vec<u32>>,
    /// Per (cycle, CU); `None` marks an execute.
    pub tags: Vec<Option<NopTag>>,
}

fn word_bytes(cfg: &ArchConfig) -> usize {
    (cfg.cus() * SliceLayout::new(cfg).width() as usize).div_ceil(8)
}

fn put_bits(buf: &mut [u8], offset: usize, value: u128, width: u32) {
    for i in 0..width as usize {
        if (value >> i) & 1 == 1 {
            let bit = offset + i;
            buf[bit / 8] |= 1 << (bit % 8);
        }
    }
}

fn get_bits(buf: &[u8], offset: usize, width: u32) -> u128 {
    let mut v = 0u128;
    for i in 0..width as usize {
        let bit = offset + i;
        v |= (((buf[bit / 8] >> (bit % 8)) & 1) as u128) << i;
    }
    v
}

impl Program {
    /// Encodes cycle-major slices. Slice 0 is the most significant part of each word.
    #[allow(clippy::too_many_arguments)]
    pub fn from_slices(
        arch: ArchConfig,
        name: String,
        n: usize,
        nnz: usize,
        stats: CompileStats,
        slices: &[CuInstruction],
        tags: Vec<Option<NopTag>>,
        l_streams: Vec<Vec<f32>>,
        b_streams: Vec<Vec<f32>>,
        out_perm: Vec<Vec<u32>>,
    ) -> Result<Self, IsaError> {
        let p = arch.cus();
        if !slices.len().is_multiple_of(p) || tags.len() != slices.len() {
            return Err(IsaError::Malformed("slice/tag count is not a whole number of words".into()));
        }
        let layout = SliceLayout::new(&arch);
        let w = layout.width();
        let wb = word_bytes(&arch);
        let cycles = slices.len() / p;
        let mut words = vec![0u8; cycles * wb];
        for (c, word) in words.chunks_mut(wb.max(1)).enumerate().take(cycles) {
            for cu in 0..p {
                let bits = layout.encode(&slices[c * p + cu])?;
                put_bits(word, (p - 1 - cu) * w as usize, bits, w);
            }
        }
        Ok(Self { arch, name, n, nnz, stats, cycles, words, l_streams, b_streams, out_perm, tags })
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn cus(&self) -> usize {
        self.arch.cus()
    }

    pub fn layout(&self) -> SliceLayout {
        SliceLayout::new(&self.arch)
    }

    pub fn word(&self, c: usize) -> &[u8] {
        let wb = word_bytes(&self.arch);
        &self.words[c * wb..(c + 1) * wb]
    }

    pub fn slice(&self, c: usize, cu: usize) -> CuInstruction {
        let layout = self.layout();
        let w = layout.width();
        let p = self.cus();
        layout.decode(get_bits(self.word(c), (p - 1 - cu) * w as usize, w))
    }

    pub fn decode_cycle(&self, c: usize, out: &mut Vec<CuInstruction>) {
        out.clear();
        out.extend((0..self.cus()).map(|cu| self.slice(c, cu)));
    }

    /// Walks the words and checks each CU's executes match its stream lengths.
    pub fn check_streams(&self) -> Result<(), IsaError> {
        let p = self.cus();
        let mut l = vec![0usize; p];
        let mut b = vec![0usize; p];
        for c in 0..self.cycles {
            for (cu, (lc, bc)) in l.iter_mut().zip(b.iter_mut()).enumerate() {
                match self.slice(c, cu).pe_ctl {
                    PeCtl::Update => {
                        *lc += 1;
                        *bc += 1;
                    }
                    PeCtl::Accumulate => *lc += 1,
                    _ => {}
                }
            }
        }
        for cu in 0..p {
            if l[cu] != self.l_streams[cu].len() || b[cu] != self.b_streams[cu].len() {
                return Err(IsaError::Streams(format!(
                    "CU {cu}: {} L / {} b pops vs streams of {} / {}",
                    l[cu],
                    b[cu],
                    self.l_streams[cu].len(),
                    self.b_streams[cu].len()
                )));
            }
        }
        Ok(())
    }

    /// Instruction or stream memories that exceed the configured capacity.
    pub fn capacity_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.cycles > STREAM_CAPACITY {
            w.push(format!("{} instruction words exceed the {STREAM_CAPACITY}-word instruction memory", self.cycles));
        }
        for (cu, s) in self.l_streams.iter().enumerate() {
            if s.len() > STREAM_CAPACITY {
                w.push(format!("CU {cu} L stream holds {} words (capacity {STREAM_CAPACITY})", s.len()));
            }
        }
        w
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.words.len());
        let a = &self.arch;
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&[a.n_log2 as u8, a.m_log2 as u8, a.k_log2 as u8, a.t_log2 as u8]);
        out.extend_from_slice(&a.clock_hz.to_le_bytes());
        out.push(a.ideal_mode as u8);
        out.extend_from_slice(&(self.layout().width() as u16).to_le_bytes());
        out.extend_from_slice(&(self.cus() as u32).to_le_bytes());
        out.extend_from_slice(&(self.cycles as u32).to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.nnz as u64).to_le_bytes());
        out.extend_from_slice(&(self.name.len() as u16).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        let s = &self.stats;
        for v in [
            s.reuse,
            s.constraints,
            s.residual_conflicts,
            s.conflict_cycles,
            s.stall_cycles,
            s.reloads,
            s.evictions,
            s.max_residency,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.words);
        for streams in [&self.l_streams, &self.b_streams] {
            for s in streams.iter() {
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                for v in s {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        for perm in &self.out_perm {
            out.extend_from_slice(&(perm.len() as u32).to_le_bytes());
            for v in perm {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend(self.tags.iter().map(|t| t.map_or(0, |t| t.index() as u8 + 1)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IsaError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(IsaError::BadMagic);
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(IsaError::Version(version));
        }
        let logs = r.take(4, "arch")?.to_vec();
        let clock_hz = f64::from_le_bytes(r.array("arch")?);
        let ideal_mode = r.take(1, "arch")?[0] != 0;
        let arch = ArchConfig {
            n_log2: logs[0] as u32,
            m_log2: logs[1] as u32,
            k_log2: logs[2] as u32,
            t_log2: logs[3] as u32,
            clock_hz,
            ideal_mode,
        };
        if arch.n_log2 > 12 || arch.m_log2 > 24 || arch.k_log2 > 24 || arch.t_log2 > 30 {
            return Err(IsaError::Malformed("architecture parameters out of range".into()));
        }
        let width = r.u16("header")? as u32;
        if width != SliceLayout::new(&arch).width() || width > 128 {
            return Err(IsaError::Malformed(format!("slice width {width} does not match the architecture")));
        }
        let p = r.u32("header")? as usize;
        if p != arch.cus() {
            return Err(IsaError::Malformed(format!("{p} CUs recorded for N={}", arch.n_log2)));
        }
        let cycles = r.u32("header")? as usize;
        let n = r.u32("header")? as usize;
        let nnz = r.u64("header")? as usize;
        let name_len = r.u16("name")? as usize;
        let name = String::from_utf8(r.take(name_len, "name")?.to_vec())
            .map_err(|_| IsaError::Malformed("name is not UTF-8".into()))?;
        let mut st = [0u64; 8];
        for v in st.iter_mut() {
            *v = r.u64("stats")?;
        }
        let stats = CompileStats {
            reuse: st[0],
            constraints: st[1],
            residual_conflicts: st[2],
            conflict_cycles: st[3],
            stall_cycles: st[4],
            reloads: st[5],
            evictions: st[6],
            max_residency: st[7],
        };
        let wb = word_bytes(&arch);
        let words_len = cycles.checked_mul(wb).ok_or(IsaError::Truncated("words"))?;
        let words = r.take(words_len, "words")?.to_vec();
        let mut f32_streams = || -> Result<Vec<Vec<f32>>, IsaError> {
            (0..p)
                .map(|_| {
                    let len = r.u32("streams")? as usize;
                    let raw = r.take(len.checked_mul(4).ok_or(IsaError::Truncated("streams"))?, "streams")?;
                    Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
                })
                .collect()
        };
        let l_streams = f32_streams()?;
        let b_streams = f32_streams()?;
        let out_perm = (0..p)
            .map(|_| {
                let len = r.u32("permutation")? as usize;
                let raw = r.take(len.checked_mul(4).ok_or(IsaError::Truncated("permutation"))?, "permutation")?;
                Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
            })
            .collect::<Result<Vec<Vec<u32>>, IsaError>>()?;
        let tags = r
            .take(cycles * p, "tags")?
            .iter()
            .map(|&t| match t {
                0 => Ok(None),
                1..=4 => Ok(Some(NopTag::ALL[t as usize - 1])),
                _ => Err(IsaError::Malformed(format!("nop tag {t}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if r.pos != bytes.len() {
            return Err(IsaError::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { arch, name, n, nnz, stats, cycles, words, l_streams, b_streams, out_perm, tags })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &'static str) -> Result<&'a [u8], IsaError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len()).ok_or(IsaError::Truncated(what))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const L: usize>(&mut self, what: &'static str) -> Result<[u8; L], IsaError> {
        Ok(self.take(L, what)?.try_into().unwrap())
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, IsaError> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, IsaError> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, IsaError> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }
}

pub fn write_program(p: &Program, path: impl AsRef<Path>) -> Result<(), IsaError> {
    std::fs::write(path, p.to_bytes())?;
    Ok(())
}

pub fn read_program(path: impl AsRef<Path>) -> Result<Program, IsaError> {
    Program::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(arch: ArchConfig) -> Program {
        let p = arch.cus();
        Program::from_slices(
            arch,
            "empty".into(),
            0,
            0,
            CompileStats::default(),
            &[],
            Vec::new(),
            vec![Vec::new(); p],
            vec![Vec::new(); p],
            vec![Vec::new(); p],
        )
        .unwrap()
    }

    fn small() -> Program {
        let arch = ArchConfig { n_log2: 1, ..ArchConfig::default() };
        let upd = CuInstruction { pe_ctl: PeCtl::Update, out_valid: true, out_sel: 1, ..Default::default() };
        let bank = CuInstruction { dm_write_en: true, ..Default::default() };
        Program::from_slices(
            arch,
            "one".into(),
            1,
            1,
            CompileStats { reuse: 3, max_residency: 1, ..Default::default() },
            &[upd, bank],
            vec![None, Some(NopTag::Lnop)],
            vec![vec![0.5], vec![]],
            vec![vec![2.0], vec![]],
            vec![vec![], vec![0]],
        )
        .unwrap()
    }

    #[test]
    fn empty_round_trip() {
        let p = empty(ArchConfig::default());
        let bytes = p.to_bytes();
        let q = Program::from_bytes(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_bytes(), bytes);
    }

    #[test]
    fn header_records_defaults() {
        let bytes = empty(ArchConfig::default()).to_bytes();
        // magic, version, 4 logs, clock, ideal flag, then width and CU count.
        let width = u16::from_le_bytes([bytes[20], bytes[21]]);
        let cus = u32::from_le_bytes(bytes[22..26].try_into().unwrap());
        assert_eq!((width, cus), (41, 64));
        assert_eq!(word_bytes(&ArchConfig::default()), 328);
    }

    #[test]
    fn small_round_trip_and_slices() {
        let p = small();
        let q = Program::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.slice(0, 0).pe_ctl, PeCtl::Update);
        assert!(q.slice(0, 1).dm_write_en);
        q.check_streams().unwrap();
    }

    #[test]
    fn errors() {
        let bytes = small().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Program::from_bytes(&bad), Err(IsaError::BadMagic)));
        let mut bad = bytes.clone();
        bad[5] = 9;
        assert!(matches!(Program::from_bytes(&bad), Err(IsaError::Version(9))));
        for cut in [3, 20, 40, bytes.len() - 1] {
            assert!(matches!(Program::from_bytes(&bytes[..cut]), Err(IsaError::Truncated(_))), "cut {cut}");
        }
    }

    #[test]
    fn stream_check_catches_mismatch() {
        let mut p = small();
        p.l_streams[0].push(1.0);
        assert!(p.check_streams().is_err());
    }
}
