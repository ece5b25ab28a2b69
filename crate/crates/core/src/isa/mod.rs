//! VLIW instruction encoding and the on-disk program container.

mod instr;
mod program;

pub use instr::{CuInstruction, PeCtl, SliceLayout};
pub use program::{read_program, write_program, CompileStats, Program, STREAM_CAPACITY, VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IsaError {
    #[error("field {field} value {value} does not fit in {bits} bits")]
    FieldOverflow { field: &'static str, value: u64, bits: u32 },
    #[error("not a program container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    Version(u16),
    #[error("truncated container: {0}")]
    Truncated(&'static str),
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error("stream mismatch: {0}")]
    Streams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
