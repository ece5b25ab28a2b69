use serde::Serialize;

/// Accelerator parameters. CU count and register-file depths are powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArchConfig {
    /// `2^n_log2` compute units.
    pub n_log2: u32,
    /// `2^m_log2` words per x_i register file.
    pub m_log2: u32,
    /// `2^k_log2` words per psum register file.
    pub k_log2: u32,
    /// `2^t_log2` data-memory words per CU.
    pub t_log2: u32,
    pub clock_hz: f64,
    /// Schedule-analysis mode without bank conflicts or register-port stalls.
    pub ideal_mode: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { n_log2: 6, m_log2: 6, k_log2: 3, t_log2: 7, clock_hz: 150e6, ideal_mode: false }
    }
}

impl ArchConfig {
    pub fn cus(&self) -> usize {
        1 << self.n_log2
    }

    pub fn xi_words(&self) -> usize {
        1 << self.m_log2
    }

    pub fn psum_words(&self) -> usize {
        1 << self.k_log2
    }

    pub fn dm_words(&self) -> usize {
        1 << self.t_log2
    }

    /// Cycles between a node's completion and the first cycle it may be consumed.
    pub fn availability_latency(&self) -> u32 {
        1
    }
}
