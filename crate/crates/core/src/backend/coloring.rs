use super::{BackendError, ConstraintGraph};

/// Bank (x_i register file / data-memory partition) holding each node's value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankAssignment {
    pub bank: Vec<u32>,
    /// Constraint edges whose endpoints share a bank.
    pub residual_conflicts: usize,
}

impl BankAssignment {
    pub fn colors_used(&self) -> usize {
        let mut seen: Vec<u32> = self.bank.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Largest-degree-first greedy colouring with `p` colours.
///
/// Each node takes the smallest colour unused by its neighbours whose bank
/// still has data-memory room (`bank_capacity` values). When none exists it
/// takes the colour with the least collision weight to its coloured
/// neighbours. A repair pass then moves nodes still in conflict to any bank
/// with strictly less collision weight.
pub fn color_banks(g: &ConstraintGraph, p: usize, bank_capacity: usize) -> Result<BankAssignment, BackendError> {
    const REPAIR_PASSES: usize = 8;
    let n = g.node_count;
    if n > p * bank_capacity {
        return Err(BackendError::DataMemory { n, capacity: p * bank_capacity });
    }
    let (ptr, adj) = g.adjacency();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(ptr[v as usize + 1] - ptr[v as usize]), v));

    const NONE: u32 = u32::MAX;
    let mut bank = vec![NONE; n];
    let mut fill = vec![0usize; p];
    let mut cost = vec![0u64; p];
    let mut touched = vec![false; p];
    let tally = |v: usize, bank: &[u32], cost: &mut [u64], touched: &mut [bool]| {
        cost.iter_mut().for_each(|c| *c = 0);
        touched.iter_mut().for_each(|t| *t = false);
        for &(u, w) in &adj[ptr[v]..ptr[v + 1]] {
            let b = bank[u as usize];
            if b != NONE {
                cost[b as usize] += u64::from(w);
                touched[b as usize] = true;
            }
        }
    };
    for &v in &order {
        let v = v as usize;
        tally(v, &bank, &mut cost, &mut touched);
        let legal = (0..p).find(|&c| !touched[c] && fill[c] < bank_capacity);
        let chosen = legal.unwrap_or_else(|| {
            (0..p)
                .filter(|&c| fill[c] < bank_capacity)
                .min_by_key(|&c| (cost[c], c))
                .expect("total capacity checked above")
        });
        bank[v] = chosen as u32;
        fill[chosen] += 1;
    }

    for _ in 0..REPAIR_PASSES {
        let mut moved = false;
        for v in 0..n {
            tally(v, &bank, &mut cost, &mut touched);
            let cur = bank[v] as usize;
            if cost[cur] == 0 {
                continue;
            }
            let best = (0..p)
                .filter(|&c| c != cur && fill[c] < bank_capacity)
                .min_by_key(|&c| (cost[c], c));
            if let Some(best) = best.filter(|&c| cost[c] < cost[cur]) {
                fill[cur] -= 1;
                fill[best] += 1;
                bank[v] = best as u32;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let residual_conflicts = g
        .read_edges
        .iter()
        .chain(&g.write_edges)
        .filter(|&&(a, b)| bank[a as usize] == bank[b as usize])
        .count();
    Ok(BankAssignment { bank, residual_conflicts })
}
