//! Reference solvers used to check every simulated run.

use thiserror::Error;

use crate::matrix::{CsrMatrix, Rhs};

/// Largest order accepted by the dense reference solver.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Error)]
#[error("dense oracle limited to n <= {DENSE_LIMIT}, got n = {0}")]
pub struct TooLarge(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Solution(pub Vec<f32>);

/// Serial forward substitution in 32-bit floats, accumulating in CSR row order.
pub fn solve_serial(m: &CsrMatrix, b: &Rhs) -> Solution {
    let n = m.n();
    let (rowptr, colidx, value) = (m.rowptr(), m.colidx(), m.values());
    let b = b.as_slice();
    let mut x = vec![0.0f32; n];
    for i in 0..n {
        let ie = rowptr[i + 1] - 1;
        let mut sum = 0.0f32;
        for j in rowptr[i]..ie {
            sum += value[j] * x[colidx[j]];
        }
        x[i] = (b[i] - sum) / value[ie];
    }
    Solution(x)
}

/// Textbook dense forward substitution in 64-bit floats, rounded to 32 bits.
pub fn solve_dense_bruteforce(m: &CsrMatrix, b: &Rhs) -> Result<Solution, TooLarge> {
    let n = m.n();
    if n > DENSE_LIMIT {
        return Err(TooLarge(n));
    }
    let mut dense = vec![0.0f64; n * n];
    for (r, c, v) in m.to_triplets() {
        dense[r * n + c] = v as f64;
    }
    let mut x = vec![0.0f64; n];
    for i in 0..n {
        let mut acc = b.as_slice()[i] as f64;
        for j in 0..i {
            acc -= dense[i * n + j] * x[j];
        }
        x[i] = acc / dense[i * n + i];
    }
    Ok(Solution(x.into_iter().map(|v| v as f32).collect()))
}

/// Largest elementwise `|a - b| / max(|b|, 1)`, with its index.
pub fn max_relative_error(actual: &[f32], expected: &[f32]) -> (f64, usize) {
    assert_eq!(actual.len(), expected.len());
    let mut worst = (0.0f64, 0usize);
    for (i, (&a, &e)) in actual.iter().zip(expected).enumerate() {
        let err = if a.is_nan() || e.is_nan() {
            f64::INFINITY
        } else {
            (a as f64 - e as f64).abs() / (e as f64).abs().max(1.0)
        };
        if err > worst.0 {
            worst = (err, i);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let m = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let b = Rhs(vec![3.0, -1.0, 0.5]);
        assert_eq!(solve_serial(&m, &b).0, b.0);
        assert_eq!(solve_dense_bruteforce(&m, &b).unwrap().0, b.0);
    }

    #[test]
    fn bidiagonal() {
        let mut t: Vec<_> = (0..5).map(|i| (i, i, 1.0)).collect();
        t.extend((1..5).map(|i| (i, i - 1, -1.0)));
        let m = CsrMatrix::from_triplets(5, &t).unwrap();
        let x = solve_serial(&m, &Rhs::ones(5));
        assert_eq!(x.0, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 0, -1.0), (1, 1, 4.0)]).unwrap();
        let b = Rhs(vec![2.0, 3.0]);
        assert_eq!(solve_dense_bruteforce(&m, &b).unwrap().0, vec![1.0, 1.0]);
        assert_eq!(solve_serial(&m, &b).0, vec![1.0, 1.0]);
    }

    #[test]
    fn dense_limit() {
        let t: Vec<_> = (0..DENSE_LIMIT + 1).map(|i| (i, i, 1.0)).collect();
        let m = CsrMatrix::from_triplets(DENSE_LIMIT + 1, &t).unwrap();
        assert!(solve_dense_bruteforce(&m, &Rhs::ones(m.n())).is_err());
    }

    #[test]
    fn relative_error_uses_unit_floor() {
        assert_eq!(max_relative_error(&[1e-7], &[0.0]).0, 1e-7f32 as f64);
        let (e, i) = max_relative_error(&[1.0, 202.0], &[1.0, 200.0]);
        assert_eq!(i, 1);
        assert!((e - 0.01).abs() < 1e-12);
    }
}
