use serde::Serialize;

/// Slot counts of every (cycle, CU) position by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    pub exec: u64,
    pub bnop: u64,
    pub pnop: u64,
    pub dnop: u64,
    pub lnop: u64,
}

impl Breakdown {
    pub fn total(&self) -> u64 {
        self.exec + self.bnop + self.pnop + self.dnop + self.lnop
    }

    /// Every cycle a CU is not executing, whatever the cause.
    pub fn blocking(&self) -> u64 {
        self.bnop + self.pnop + self.dnop + self.lnop
    }
}

/// Fractions of all slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Shares {
    pub exec: f64,
    pub bnop: f64,
    pub pnop: f64,
    pub dnop: f64,
    pub lnop: f64,
}

pub fn breakdown(r: &SimReport) -> Shares {
    let b = &r.breakdown;
    let total = b.total();
    if total == 0 {
        return Shares::default();
    }
    let f = |x: u64| x as f64 / total as f64;
    let (exec, bnop, pnop, dnop, lnop) = (f(b.exec), f(b.bnop), f(b.pnop), f(b.dnop), f(b.lnop));
    Shares { exec, bnop, pnop, dnop, lnop }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub total_cycles: u64,
    pub executes_per_cu: Vec<u64>,
    pub nops_per_cu: Vec<u64>,
    pub breakdown: Breakdown,
    pub throughput_gops: f64,
    pub reuse: u64,
    pub residual_conflicts: u64,
    pub max_residency: u64,
    pub dm_writes: u64,
    pub reloads: u64,
    #[serde(skip)]
    pub x: Vec<f32>,
}
