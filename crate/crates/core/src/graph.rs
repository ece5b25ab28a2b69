//! Dependency DAG of a triangular system and the structural metrics derived from it.

use serde::Serialize;

use crate::matrix::CsrMatrix;

/// Node `v` depends on node `u` for every off-diagonal entry `L[v][u]`.
///
/// Edges are stored grouped by destination in CSR order, so an edge id is the
/// position of the off-diagonal among all off-diagonals of the matrix.
#[derive(Debug, Clone)]
pub struct SolveDag {
    node_count: usize,
    pred_ptr: Vec<usize>,
    pred_src: Vec<u32>,
    pred_val: Vec<f32>,
    succ_ptr: Vec<usize>,
    succ_dst: Vec<u32>,
    succ_edge: Vec<u32>,
    diag: Vec<f32>,
    level_of: Vec<u32>,
    level_sizes: Vec<usize>,
}

pub fn build_dag(m: &CsrMatrix) -> SolveDag {
    let n = m.n();
    let mut pred_ptr = Vec::with_capacity(n + 1);
    let mut pred_src = Vec::with_capacity(m.nnz() - n);
    let mut pred_val = Vec::with_capacity(m.nnz() - n);
    let mut diag = Vec::with_capacity(n);
    pred_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = m.off_diagonal(i);
        pred_src.extend(cols.iter().map(|&c| c as u32));
        pred_val.extend_from_slice(vals);
        pred_ptr.push(pred_src.len());
        diag.push(m.diagonal(i));
    }

    let mut outdeg = vec![0usize; n + 1];
    for &s in &pred_src {
        outdeg[s as usize + 1] += 1;
    }
    let mut succ_ptr = outdeg;
    for i in 0..n {
        succ_ptr[i + 1] += succ_ptr[i];
    }
    let mut fill = succ_ptr.clone();
    let mut succ_dst = vec![0u32; pred_src.len()];
    let mut succ_edge = vec![0u32; pred_src.len()];
    for v in 0..n {
        for e in pred_ptr[v]..pred_ptr[v + 1] {
            let s = pred_src[e] as usize;
            succ_dst[fill[s]] = v as u32;
            succ_edge[fill[s]] = e as u32;
            fill[s] += 1;
        }
    }

    let mut level_of = vec![0u32; n];
    let mut level_sizes: Vec<usize> = Vec::new();
    for v in 0..n {
        let lvl = pred_src[pred_ptr[v]..pred_ptr[v + 1]]
            .iter()
            .map(|&u| level_of[u as usize] + 1)
            .max()
            .unwrap_or(0);
        level_of[v] = lvl;
        if level_sizes.len() <= lvl as usize {
            level_sizes.resize(lvl as usize + 1, 0);
        }
        level_sizes[lvl as usize] += 1;
    }

    SolveDag { node_count: n, pred_ptr, pred_src, pred_val, succ_ptr, succ_dst, succ_edge, diag, level_of, level_sizes }
}

impl SolveDag {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.pred_src.len()
    }

    pub fn indegree(&self, v: usize) -> usize {
        self.pred_ptr[v + 1] - self.pred_ptr[v]
    }

    pub fn max_indegree(&self) -> usize {
        (0..self.node_count).map(|v| self.indegree(v)).max().unwrap_or(0)
    }

    /// Edge ids of the input edges of `v`.
    pub fn in_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.pred_ptr[v]..self.pred_ptr[v + 1]
    }

    pub fn predecessors(&self, v: usize) -> &[u32] {
        &self.pred_src[self.pred_ptr[v]..self.pred_ptr[v + 1]]
    }

    pub fn successors(&self, u: usize) -> &[u32] {
        &self.succ_dst[self.succ_ptr[u]..self.succ_ptr[u + 1]]
    }

    /// Edge ids of the output edges of `u`, parallel to [`Self::successors`].
    pub fn successor_edges(&self, u: usize) -> &[u32] {
        &self.succ_edge[self.succ_ptr[u]..self.succ_ptr[u + 1]]
    }

    pub fn edge_source(&self, e: usize) -> u32 {
        self.pred_src[e]
    }

    pub fn edge_value(&self, e: usize) -> f32 {
        self.pred_val[e]
    }

    /// Destination node of edge `e`.
    pub fn edge_target(&self, e: usize) -> u32 {
        // pred_ptr is sorted; the destination is the row whose range holds e.
        (self.pred_ptr.partition_point(|&p| p <= e) - 1) as u32
    }

    pub fn diagonal(&self, v: usize) -> f32 {
        self.diag[v]
    }

    pub fn level_of(&self) -> &[u32] {
        &self.level_of
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CduMetrics {
    pub cdu_node_ratio: f64,
    pub cdu_edge_ratio: f64,
    pub cdu_level_ratio: f64,
    pub edges_per_cdu_node: f64,
}

/// Coarse-dataflow-unfriendly statistics.
///
/// A level is CDU when it holds strictly fewer than `threshold_fraction * p`
/// nodes; its nodes and their input edges are CDU as well.
pub fn cdu_metrics(d: &SolveDag, p: usize, threshold_fraction: f64) -> CduMetrics {
    let threshold = threshold_fraction * p as f64;
    let is_cdu_level: Vec<bool> = d.level_sizes.iter().map(|&s| (s as f64) < threshold).collect();
    let mut cdu_nodes = 0usize;
    let mut cdu_edges = 0usize;
    for v in 0..d.node_count {
        if is_cdu_level[d.level_of[v] as usize] {
            cdu_nodes += 1;
            cdu_edges += d.indegree(v);
        }
    }
    let cdu_levels = is_cdu_level.iter().filter(|&&c| c).count();
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    CduMetrics {
        cdu_node_ratio: pct(cdu_nodes, d.node_count),
        cdu_edge_ratio: pct(cdu_edges, d.edge_count()),
        cdu_level_ratio: pct(cdu_levels, d.level_sizes.len()),
        edges_per_cdu_node: if cdu_nodes == 0 { 0.0 } else { cdu_edges as f64 / cdu_nodes as f64 },
    }
}

/// Floating-point operation count of a solve: `2 * nnz - n`.
pub fn binary_node_count(m: &CsrMatrix) -> usize {
    2 * m.nnz() - m.n()
}

/// Throughput ceiling in GOPS when every CU executes in every cycle.
pub fn peak_throughput(m: &CsrMatrix, p: usize, clock_hz: f64) -> f64 {
    peak_throughput_raw(m.n(), m.nnz(), p, clock_hz)
}

pub fn peak_throughput_raw(n: usize, nnz: usize, p: usize, clock_hz: f64) -> f64 {
    2.0 * p as f64 * clock_hz * (1.0 - n as f64 / (2.0 * nnz as f64)) / 1e9
}

/// Coefficient of variation (percent) of per-CU input-edge counts.
pub fn load_balance_degree(assignment: &[usize], d: &SolveDag, p: usize) -> f64 {
    let mut loads = vec![0.0f64; p];
    for (v, &cu) in assignment.iter().enumerate() {
        loads[cu] += d.indegree(v) as f64;
    }
    coefficient_of_variation(&loads)
}

fn coefficient_of_variation(loads: &[f64]) -> f64 {
    if loads.is_empty() {
        return 0.0;
    }
    let mean = loads.iter().sum::<f64>() / loads.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = loads.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / loads.len() as f64;
    100.0 * var.sqrt() / mean
}

/// Every structural number reported per matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DagMetrics {
    #[serde(flatten)]
    pub cdu: CduMetrics,
    pub binary_nodes: usize,
    pub load_balance_degree: f64,
    pub peak_throughput: f64,
}

pub fn dag_metrics(m: &CsrMatrix, d: &SolveDag, assignment: &[usize], p: usize, clock_hz: f64) -> DagMetrics {
    DagMetrics {
        cdu: cdu_metrics(d, p, 0.2),
        binary_nodes: binary_node_count(m),
        load_balance_degree: load_balance_degree(assignment, d, p),
        peak_throughput: peak_throughput(m, p, clock_hz),
    }
}
