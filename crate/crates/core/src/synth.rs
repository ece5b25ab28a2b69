//! Deterministic synthetic triangular systems and small worked-example graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::CsrMatrix;

pub fn diagonal(n: usize) -> CsrMatrix {
    let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
    CsrMatrix::from_triplets(n, &t).expect("diagonal matrix is canonical")
}

/// Lower bidiagonal: unit diagonal, -1 on the subdiagonal.
pub fn chain(n: usize) -> CsrMatrix {
    let mut t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
    t.extend((1..n).map(|i| (i, i - 1, -1.0)));
    CsrMatrix::from_triplets(n, &t).expect("chain matrix is canonical")
}

/// `k` independent roots feeding one sink.
pub fn fanin(k: usize) -> CsrMatrix {
    let mut t: Vec<_> = (0..=k).map(|i| (i, i, 1.0)).collect();
    t.extend((0..k).map(|j| (k, j, -1.0)));
    CsrMatrix::from_triplets(k + 1, &t).expect("fan-in matrix is canonical")
}

fn row_values(rng: &mut ChaCha8Rng, row: usize, cols: &[usize], t: &mut Vec<(usize, usize, f32)>) {
    // Strict row diagonal dominance keeps every solution component bounded.
    let scale = 0.9 / cols.len().max(1) as f32;
    for &c in cols {
        let v: f32 = rng.gen_range(-1.0f32..1.0);
        t.push((row, c, if v == 0.0 { scale } else { v * scale }));
    }
    let mag: f32 = rng.gen_range(1.0f32..2.0);
    t.push((row, row, if rng.gen_bool(0.5) { mag } else { -mag }));
}

/// Each strictly-lower position is present with probability `density`.
pub fn random_lower(n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut cols = Vec::new();
    for i in 0..n {
        cols.clear();
        for j in 0..i {
            if rng.gen_bool(density) {
                cols.push(j);
            }
        }
        row_values(&mut rng, i, &cols, &mut t);
    }
    CsrMatrix::from_triplets(n, &t).expect("random lower matrix is canonical")
}

/// Each row takes up to `max_indegree` distinct predecessors from the `window` rows above it.
pub fn banded_random(n: usize, max_indegree: usize, window: usize, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..n {
        let lo = i.saturating_sub(window);
        let span = i - lo;
        let k = max_indegree.min(span);
        cols.clear();
        while cols.len() < k {
            let c = rng.gen_range(lo..i);
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
        cols.sort_unstable();
        row_values(&mut rng, i, &cols, &mut t);
    }
    CsrMatrix::from_triplets(n, &t).expect("banded matrix is canonical")
}

/// First five rows of the introductory example: unit diagonal, -1 off-diagonal.
///
/// Row 3 (1-based) reads rows 1 and 2; row 4 reads rows 1 and 3; row 5 reads
/// rows 2 and 3, so rows 4 and 5 share a level.
pub fn intro_example() -> CsrMatrix {
    let mut t: Vec<_> = (0..5).map(|i| (i, i, 1.0)).collect();
    t.extend([(2, 0, -1.0), (2, 1, -1.0), (3, 0, -1.0), (3, 2, -1.0), (4, 1, -1.0), (4, 2, -1.0)]);
    CsrMatrix::from_triplets(5, &t).expect("intro example is canonical")
}

/// Three CDU nodes forming a chain over three already-solved roots.
///
/// Rows 0..3 are the pre-solved roots (labelled 1, 2, 3); rows 3..6 are the
/// nodes labelled 7, 8, 9 with inputs {1,2,3}, {1,2,7} and {1,3,8}.
pub struct DataflowExample {
    pub matrix: CsrMatrix,
    pub presolved: Vec<usize>,
    /// Node to CU; the roots are pinned to CU 0 but never executed.
    pub assignment: Vec<usize>,
    pub cus: usize,
}

pub fn dataflow_example() -> DataflowExample {
    let mut t: Vec<_> = (0..6).map(|i| (i, i, 1.0)).collect();
    t.extend([
        (3, 0, -1.0),
        (3, 1, -1.0),
        (3, 2, -1.0),
        (4, 0, -1.0),
        (4, 1, -1.0),
        (4, 3, -1.0),
        (5, 0, -1.0),
        (5, 2, -1.0),
        (5, 4, -1.0),
    ]);
    DataflowExample {
        matrix: CsrMatrix::from_triplets(6, &t).expect("dataflow example is canonical"),
        presolved: vec![0, 1, 2],
        assignment: vec![0, 0, 0, 0, 1, 2],
        cus: 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_lower(100, 0.05, 42), random_lower(100, 0.05, 42));
        assert_ne!(random_lower(100, 0.05, 42), random_lower(100, 0.05, 43));
        assert_eq!(banded_random(300, 8, 64, 1), banded_random(300, 8, 64, 1));
    }

    #[test]
    fn shapes() {
        assert_eq!(chain(5).rowptr(), &[0, 1, 3, 5, 7, 9]);
        let f = fanin(4);
        assert_eq!(f.off_diagonal(4).0, &[0, 1, 2, 3]);
        let b = banded_random(1000, 8, 32, 3);
        for i in 0..1000 {
            let (cols, _) = b.off_diagonal(i);
            assert!(cols.len() <= 8);
            assert!(cols.iter().all(|&c| c + 32 >= i));
        }
    }

    #[test]
    fn random_rows_are_diagonally_dominant() {
        let m = random_lower(300, 0.2, 7);
        for i in 0..m.n() {
            let off: f32 = m.off_diagonal(i).1.iter().map(|v| v.abs()).sum();
            assert!(off < m.diagonal(i).abs());
        }
    }
}
