use crate::graph::SolveDag;
use crate::sched::Schedule;

/// Pairs of nodes that must not share an x_i bank.
///
/// `read_edges` join distinct sources read in the same cycle (the reported
/// constraint count); `write_edges` join nodes completed in the same cycle,
/// since each bank has one write port. Each weight counts the cycles in which
/// the pair collides.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintGraph {
    pub node_count: usize,
    pub read_edges: Vec<(u32, u32)>,
    pub read_weights: Vec<u32>,
    pub write_edges: Vec<(u32, u32)>,
    pub write_weights: Vec<u32>,
}

impl ConstraintGraph {
    /// Read constraints only, each of weight one.
    pub fn from_read_edges(node_count: usize, read_edges: Vec<(u32, u32)>) -> Self {
        let read_weights = vec![1; read_edges.len()];
        Self { node_count, read_edges, read_weights, ..Self::default() }
    }

    pub fn constraint_count(&self) -> usize {
        self.read_edges.len()
    }

    /// Weighted CSR adjacency over both edge kinds; a pair that is both a
    /// read and a write constraint appears once with the summed weight.
    pub fn adjacency(&self) -> (Vec<usize>, Vec<(u32, u32)>) {
        let n = self.node_count;
        let mut deg = vec![0usize; n + 1];
        let all = || {
            self.read_edges
                .iter()
                .zip(&self.read_weights)
                .chain(self.write_edges.iter().zip(&self.write_weights))
        };
        for (&(a, b), _) in all() {
            deg[a as usize + 1] += 1;
            deg[b as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let mut fill = deg.clone();
        let mut adj = vec![(0u32, 0u32); deg[n]];
        for (&(a, b), &w) in all() {
            adj[fill[a as usize]] = (b, w);
            fill[a as usize] += 1;
            adj[fill[b as usize]] = (a, w);
            fill[b as usize] += 1;
        }
        let mut ptr = vec![0usize; n + 1];
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(adj.len());
        for v in 0..n {
            let row = &mut adj[deg[v]..deg[v + 1]];
            row.sort_unstable();
            let start = out.len();
            for &(u, w) in row.iter() {
                if out.len() > start && out[out.len() - 1].0 == u {
                    let last = out.len() - 1;
                    out[last].1 += w;
                } else {
                    out.push((u, w));
                }
            }
            ptr[v + 1] = out.len();
        }
        (ptr, out)
    }
}

/// Sorts pairs and collapses repeats into (pair, multiplicity).
fn count_pairs(mut pairs: Vec<(u32, u32)>) -> (Vec<(u32, u32)>, Vec<u32>) {
    pairs.sort_unstable();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut weights: Vec<u32> = Vec::new();
    for p in pairs {
        if edges.last() == Some(&p) {
            *weights.last_mut().expect("parallel to edges") += 1;
        } else {
            edges.push(p);
            weights.push(1);
        }
    }
    (edges, weights)
}

fn pairs_into(set: &mut [u32], out: &mut Vec<(u32, u32)>) {
    set.sort_unstable();
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            out.push((set[i], set[j]));
        }
    }
}

pub fn build_constraints(s: &Schedule, d: &SolveDag) -> ConstraintGraph {
    let mut read_edges = Vec::new();
    let mut write_edges = Vec::new();
    let mut sources = Vec::new();
    let mut done = Vec::new();
    for c in 0..s.total_cycles() {
        sources.clear();
        done.clear();
        for e in s.cycle(c).iter().filter_map(|a| a.exec()) {
            match e.edge {
                Some(edge) => sources.push(d.edge_source(edge as usize)),
                None => done.push(e.node),
            }
        }
        sources.sort_unstable();
        sources.dedup();
        pairs_into(&mut sources, &mut read_edges);
        pairs_into(&mut done, &mut write_edges);
    }
    let (read_edges, read_weights) = count_pairs(read_edges);
    let (write_edges, write_weights) = count_pairs(write_edges);
    ConstraintGraph { node_count: d.node_count(), read_edges, read_weights, write_edges, write_weights }
}

/// Register-file reads saved by same-cycle grouping: per cycle and source, readers minus one.
pub fn reuse_metric(s: &Schedule, d: &SolveDag) -> u64 {
    let mut total = 0u64;
    let mut sources = Vec::new();
    for c in 0..s.total_cycles() {
        sources.clear();
        sources.extend(s.cycle(c).iter().filter_map(|a| a.exec()).filter_map(|e| e.edge).map(|e| d.edge_source(e as usize)));
        let reads = sources.len();
        sources.sort_unstable();
        sources.dedup();
        total += (reads - sources.len()) as u64;
    }
    total
}
