use serde::Serialize;

use crate::arch::ArchConfig;

use super::IsaError;

/// PE control field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum PeCtl {
    #[default]
    Nop = 0,
    /// `x = (b - psum) * recip(L_ii)`
    Update = 1,
    /// `psum + L_ij * x_j`
    Accumulate = 2,
    Reserved = 3,
}

impl PeCtl {
    fn from_bits(b: u128) -> Self {
        match b & 3 {
            0 => PeCtl::Nop,
            1 => PeCtl::Update,
            2 => PeCtl::Accumulate,
            _ => PeCtl::Reserved,
        }
    }
}

/// One CU's slice of a VLIW word.
///
/// `psum_read_addr` doubles as the operand select when `psum_read_en` is
/// clear: MSB set means the feedback register, clear means zero.
/// `s34` bit 0 picks the x_i write source (0 = output crossbar, 1 = data
/// memory reload); bit 1 picks the data-memory write source (0 = output
/// crossbar, 1 = x_i read data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct CuInstruction {
    pub psum_read_en: bool,
    pub psum_write_en: bool,
    pub psum_read_addr: u32,
    pub xi_read_en: bool,
    pub xi_write_en: bool,
    pub xi_read_addr: u32,
    pub xi_release: bool,
    pub dm_read_en: bool,
    pub dm_write_en: bool,
    pub dm_read_addr: u32,
    pub in_valid: bool,
    pub in_sel: u32,
    pub out_valid: bool,
    pub out_sel: u32,
    pub s34: u8,
    pub pe_ctl: PeCtl,
}

impl CuInstruction {
    pub fn is_nop(&self) -> bool {
        *self == CuInstruction::default()
    }

    /// psum operand select when no file read is enabled.
    pub fn feedback_select(k_log2: u32) -> u32 {
        1 << (k_log2 - 1)
    }
}

/// Field widths of a slice for a given configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceLayout {
    pub k: u32,
    pub m: u32,
    pub t: u32,
    pub n: u32,
}

impl SliceLayout {
    pub fn new(cfg: &ArchConfig) -> Self {
        Self { k: cfg.k_log2, m: cfg.m_log2, t: cfg.t_log2, n: cfg.n_log2 }
    }

    pub fn width(&self) -> u32 {
        13 + self.k + self.m + self.t + 2 * self.n
    }

    fn fields(&self, s: &CuInstruction) -> [(&'static str, u128, u32); 16] {
        [
            ("psum_read_en", s.psum_read_en as u128, 1),
            ("psum_write_en", s.psum_write_en as u128, 1),
            ("psum_read_addr", s.psum_read_addr as u128, self.k),
            ("xi_read_en", s.xi_read_en as u128, 1),
            ("xi_write_en", s.xi_write_en as u128, 1),
            ("xi_read_addr", s.xi_read_addr as u128, self.m),
            ("xi_release", s.xi_release as u128, 1),
            ("dm_read_en", s.dm_read_en as u128, 1),
            ("dm_write_en", s.dm_write_en as u128, 1),
            ("dm_read_addr", s.dm_read_addr as u128, self.t),
            ("in_valid", s.in_valid as u128, 1),
            ("in_sel", s.in_sel as u128, self.n),
            ("out_valid", s.out_valid as u128, 1),
            ("out_sel", s.out_sel as u128, self.n),
            ("s34", s.s34 as u128, 2),
            ("pe_ctl", s.pe_ctl as u128, 2),
        ]
    }

    /// Packs fields MSB-first into the low `width()` bits.
    pub fn encode(&self, s: &CuInstruction) -> Result<u128, IsaError> {
        let mut acc = 0u128;
        for (name, value, w) in self.fields(s) {
            if value >> w != 0 {
                return Err(IsaError::FieldOverflow { field: name, value: value as u64, bits: w });
            }
            acc = (acc << w) | value;
        }
        Ok(acc)
    }

    pub fn decode(&self, bits: u128) -> CuInstruction {
        let mut shift = self.width();
        let mut take = |w: u32| {
            shift -= w;
            (bits >> shift) & ((1u128 << w) - 1)
        };
        CuInstruction {
            psum_read_en: take(1) == 1,
            psum_write_en: take(1) == 1,
            psum_read_addr: take(self.k) as u32,
            xi_read_en: take(1) == 1,
            xi_write_en: take(1) == 1,
            xi_read_addr: take(self.m) as u32,
            xi_release: take(1) == 1,
            dm_read_en: take(1) == 1,
            dm_write_en: take(1) == 1,
            dm_read_addr: take(self.t) as u32,
            in_valid: take(1) == 1,
            in_sel: take(self.n) as u32,
            out_valid: take(1) == 1,
            out_sel: take(self.n) as u32,
            s34: take(2) as u8,
            pe_ctl: PeCtl::from_bits(take(2)),
        }
    }
}
