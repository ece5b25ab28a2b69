//! Compiler and cycle-level simulator for a medium-granularity dataflow
//! sparse triangular solve accelerator.

pub mod arch;
pub mod graph;
pub mod matrix;
pub mod oracle;
pub mod sched;
pub mod synth;
pub mod backend;
pub mod isa;
pub mod pipeline;
pub mod sim;

pub use pipeline::{compile, compile_sweep, schedule_matrix, Compiled, Error};
