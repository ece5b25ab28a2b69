//! Sparse lower-triangular systems in CSR form.
//!
//! Rows are canonical: off-diagonal entries sorted by column, all strictly
//! below the diagonal, followed by exactly one non-zero diagonal entry.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row} has no diagonal entry")]
    MissingDiagonal { row: usize },
    #[error("row {row} has a zero diagonal entry")]
    ZeroDiagonal { row: usize },
    #[error("entry ({row}, {col}) lies above the diagonal")]
    UpperEntry { row: usize, col: usize },
    #[error("entry ({row}, {col}) is outside a {n} x {n} matrix")]
    OutOfRange { row: usize, col: usize, n: usize },
    #[error("malformed CSR arrays: {0}")]
    Malformed(String),
    #[error("right-hand side has {found} entries, expected {expected}")]
    RhsLength { expected: usize, found: usize },
}

/// A validated sparse lower-triangular matrix, diagonal stored last in each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    rowptr: Vec<usize>,
    colidx: Vec<usize>,
    value: Vec<f32>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every canonical-form invariant.
    pub fn from_parts(
        n: usize,
        rowptr: Vec<usize>,
        colidx: Vec<usize>,
        value: Vec<f32>,
    ) -> Result<Self, MatrixError> {
        if rowptr.len() != n + 1 {
            return Err(MatrixError::Malformed(format!(
                "rowptr has {} entries, expected {}",
                rowptr.len(),
                n + 1
            )));
        }
        if rowptr[0] != 0 || rowptr[n] != colidx.len() || colidx.len() != value.len() {
            return Err(MatrixError::Malformed(
                "rowptr endpoints disagree with colidx/value lengths".into(),
            ));
        }
        for i in 0..n {
            let (lo, hi) = (rowptr[i], rowptr[i + 1]);
            if hi <= lo {
                return Err(MatrixError::MissingDiagonal { row: i });
            }
            let last = hi - 1;
            if colidx[last] != i {
                return Err(MatrixError::MissingDiagonal { row: i });
            }
            if value[last] == 0.0 {
                return Err(MatrixError::ZeroDiagonal { row: i });
            }
            let mut prev: Option<usize> = None;
            for k in lo..last {
                let c = colidx[k];
                if c >= i {
                    return Err(MatrixError::UpperEntry { row: i, col: c });
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(MatrixError::Malformed(format!(
                        "row {i} columns are not strictly ascending"
                    )));
                }
                prev = Some(c);
            }
        }
        Ok(Self { n, rowptr, colidx, value })
    }

    /// Canonicalizes an unordered list of `(row, col, value)` entries (0-based).
    ///
    /// Duplicate coordinates are summed. Every row must end up with a non-zero
    /// diagonal and no entries above it.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f32)]) -> Result<Self, MatrixError> {
        let mut sorted: Vec<(usize, usize, f32)> = Vec::with_capacity(entries.len());
        for &(r, c, v) in entries {
            if r >= n || c >= n {
                return Err(MatrixError::OutOfRange { row: r, col: c, n });
            }
            if c > r {
                return Err(MatrixError::UpperEntry { row: r, col: c });
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|a| (a.0, a.1));

        let mut rowptr = vec![0usize; n + 1];
        let mut colidx = Vec::with_capacity(sorted.len());
        let mut value = Vec::with_capacity(sorted.len());
        let mut iter = sorted.into_iter().peekable();
        for i in 0..n {
            while let Some(&(r, c, v)) = iter.peek() {
                if r != i {
                    break;
                }
                iter.next();
                if colidx.len() > rowptr[i] && *colidx.last().unwrap() == c {
                    *value.last_mut().unwrap() += v;
                } else {
                    colidx.push(c);
                    value.push(v);
                }
            }
            rowptr[i + 1] = colidx.len();
        }
        Self::from_parts(n, rowptr, colidx, value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.value.len()
    }

    pub fn rowptr(&self) -> &[usize] {
        &self.rowptr
    }

    pub fn colidx(&self) -> &[usize] {
        &self.colidx
    }

    pub fn values(&self) -> &[f32] {
        &self.value
    }

    /// Off-diagonal columns and values of row `i`.
    pub fn off_diagonal(&self, i: usize) -> (&[usize], &[f32]) {
        let (lo, hi) = (self.rowptr[i], self.rowptr[i + 1] - 1);
        (&self.colidx[lo..hi], &self.value[lo..hi])
    }

    pub fn diagonal(&self, i: usize) -> f32 {
        self.value[self.rowptr[i + 1] - 1]
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f32)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                out.push((i, self.colidx[k], self.value[k]));
            }
        }
        out
    }

    /// Serializes as a Matrix Market coordinate file (1-based, `real general`).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.nnz());
        for (r, c, v) in self.to_triplets() {
            let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v);
        }
        s
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<(), MatrixError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_matrix_market().as_bytes())?;
        Ok(())
    }
}

/// Replaces each diagonal value with its reciprocal so the accelerator only multiplies.
pub fn precompute_reciprocals(m: &CsrMatrix) -> CsrMatrix {
    let mut out = m.clone();
    for i in 0..m.n {
        let k = m.rowptr[i + 1] - 1;
        out.value[k] = 1.0 / m.value[k];
    }
    out
}

/// Right-hand side vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs(pub Vec<f32>);

impl Rhs {
    pub fn ones(n: usize) -> Self {
        Rhs(vec![1.0; n])
    }

    pub fn for_matrix(m: &CsrMatrix, b: Vec<f32>) -> Result<Self, MatrixError> {
        if b.len() != m.n() {
            return Err(MatrixError::RhsLength { expected: m.n(), found: b.len() });
        }
        Ok(Rhs(b))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Reads a plain-text RHS file: one float per line, blank lines and `%`/`#` comments ignored.
pub fn load_rhs(path: impl AsRef<Path>, n: usize) -> Result<Rhs, MatrixError> {
    let text = std::fs::read_to_string(path)?;
    let mut b = Vec::with_capacity(n);
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let v: f32 = t.parse().map_err(|_| MatrixError::Parse {
            line: lineno + 1,
            msg: format!("invalid float {t:?}"),
        })?;
        b.push(v);
    }
    if b.len() != n {
        return Err(MatrixError::RhsLength { expected: n, found: b.len() });
    }
    Ok(Rhs(b))
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

pub fn load_matrix_market(path: impl AsRef<Path>, lower_extract: bool) -> Result<CsrMatrix, MatrixError> {
    let f = std::fs::File::open(path)?;
    parse_matrix_market(f, lower_extract)
}

/// Parses a Matrix Market coordinate stream.
///
/// With `lower_extract`, entries above the diagonal are dropped and a missing
/// or zero diagonal is replaced by 1.0. Otherwise either condition is an error.
pub fn parse_matrix_market(reader: impl Read, lower_extract: bool) -> Result<CsrMatrix, MatrixError> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = match lines.next() {
        Some((i, l)) => (i + 1, l?),
        None => return Err(MatrixError::Parse { line: 1, msg: "empty file".into() }),
    };
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(MatrixError::Parse { line: lineno, msg: "missing %%MatrixMarket matrix header".into() });
    }
    if tokens[2] != "coordinate" {
        return Err(MatrixError::Parse {
            line: lineno,
            msg: format!("unsupported storage {:?}, only coordinate is accepted", tokens[2]),
        });
    }
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" => Field::Pattern,
        other => {
            return Err(MatrixError::Parse { line: lineno, msg: format!("unsupported field {other:?}") })
        }
    };
    match tokens[4].as_str() {
        "general" | "symmetric" => {}
        other => {
            return Err(MatrixError::Parse { line: lineno, msg: format!("unsupported symmetry {other:?}") })
        }
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    let mut diag_seen: Vec<bool> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let bad = |msg: &str| MatrixError::Parse { line: lineno, msg: msg.to_string() };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(bad("expected size line `rows cols entries`"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad("invalid size line"));
                let (r, c, e) = (p(parts[0])?, p(parts[1])?, p(parts[2])?);
                if r != c {
                    return Err(MatrixError::NotSquare { rows: r, cols: c });
                }
                size = Some((r, c, e));
                diag_seen = vec![false; r];
                entries.reserve(e + r);
            }
            Some((n, _, _)) => {
                let need = if field == Field::Pattern { 2 } else { 3 };
                if parts.len() < need {
                    return Err(bad("too few fields in entry"));
                }
                let r = parts[0].parse::<usize>().map_err(|_| bad("invalid row index"))?;
                let c = parts[1].parse::<usize>().map_err(|_| bad("invalid column index"))?;
                if r == 0 || c == 0 || r > n || c > n {
                    return Err(MatrixError::OutOfRange { row: r, col: c, n });
                }
                let (r, c) = (r - 1, c - 1);
                let v = match field {
                    Field::Pattern => {
                        if r == c {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    Field::Real => parts[2].parse::<f32>().map_err(|_| bad("invalid value"))?,
                };
                if c > r {
                    if lower_extract {
                        continue;
                    }
                    return Err(MatrixError::UpperEntry { row: r, col: c });
                }
                if r == c {
                    diag_seen[r] = true;
                }
                entries.push((r, c, v));
            }
        }
    }
    let Some((n, _, _)) = size else {
        return Err(MatrixError::Parse { line: lineno, msg: "missing size line".into() });
    };

    if lower_extract {
        // Sum duplicates first so a zero diagonal is detected after accumulation.
        let mut diag = vec![0.0f32; n];
        entries.retain(|&(r, c, v)| {
            if r == c {
                diag[r] += v;
                false
            } else {
                true
            }
        });
        for (i, d) in diag.into_iter().enumerate() {
            let d = if diag_seen[i] && d != 0.0 { d } else { 1.0 };
            entries.push((i, i, d));
        }
    } else if let Some(row) = diag_seen.iter().position(|seen| !seen) {
        return Err(MatrixError::MissingDiagonal { row });
    }
    CsrMatrix::from_triplets(n, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm(body: &str) -> String {
        format!("%%MatrixMarket matrix coordinate real general\n% comment\n{body}")
    }

    #[test]
    fn single_entry() {
        let m = parse_matrix_market(mm("1 1 1\n1 1 2.0\n").as_bytes(), false).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.values(), &[2.0]);
    }

    #[test]
    fn bidiagonal_rowptr() {
        let mut body = String::from("5 5 9\n");
        for i in 1..=5 {
            body.push_str(&format!("{i} {i} 1\n"));
        }
        for i in 2..=5 {
            body.push_str(&format!("{} {} -1\n", i, i - 1));
        }
        let m = parse_matrix_market(mm(&body).as_bytes(), false).unwrap();
        assert_eq!(m.rowptr(), &[0, 1, 3, 5, 7, 9]);
        // diagonal last in every row
        for i in 0..5 {
            assert_eq!(m.colidx()[m.rowptr()[i + 1] - 1], i);
        }
    }

    #[test]
    fn pattern_values() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 3\n2 1\n1 1\n2 2\n";
        let m = parse_matrix_market(text.as_bytes(), false).unwrap();
        assert_eq!(m.values(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn rejects_upper_without_extract() {
        let err = parse_matrix_market(mm("2 2 3\n1 1 1\n1 2 5\n2 2 1\n").as_bytes(), false).unwrap_err();
        assert!(matches!(err, MatrixError::UpperEntry { row: 0, col: 1 }));
    }

    #[test]
    fn rejects_zero_diagonal_without_extract() {
        let err = parse_matrix_market(mm("2 2 2\n1 1 0\n2 2 1\n").as_bytes(), false).unwrap_err();
        assert!(matches!(err, MatrixError::ZeroDiagonal { row: 0 }));
        let err = parse_matrix_market(mm("2 2 1\n2 2 1\n").as_bytes(), false).unwrap_err();
        assert!(matches!(err, MatrixError::MissingDiagonal { row: 0 }));
    }

    #[test]
    fn rejects_non_square_and_garbage() {
        let err = parse_matrix_market(mm("2 3 0\n").as_bytes(), true).unwrap_err();
        assert!(matches!(err, MatrixError::NotSquare { .. }));
        let err = parse_matrix_market(mm("2 2 1\n1 x 1\n").as_bytes(), true).unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 4, .. }));
        let err = parse_matrix_market("hello\n".as_bytes(), true).unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 1, .. }));
    }

    #[test]
    fn lower_extract_drops_upper_and_forces_unit_diagonal() {
        let m = parse_matrix_market(mm("3 3 5\n1 2 4\n2 1 3\n2 2 0\n3 3 7\n3 1 1\n").as_bytes(), true).unwrap();
        assert_eq!(m.diagonal(0), 1.0);
        assert_eq!(m.diagonal(1), 1.0);
        assert_eq!(m.diagonal(2), 7.0);
        assert_eq!(m.off_diagonal(1), (&[0usize][..], &[3.0f32][..]));
        assert_eq!(m.nnz(), 5);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, &[(1, 0, 1.0), (1, 0, 2.0), (0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m.off_diagonal(1).1, &[3.0]);
    }

    #[test]
    fn reciprocals() {
        let m = CsrMatrix::from_triplets(1, &[(0, 0, 2.0)]).unwrap();
        assert_eq!(precompute_reciprocals(&m).values(), &[0.5]);
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 0, -3.0), (1, 1, 0.5)]).unwrap();
        let r = precompute_reciprocals(&m);
        assert_eq!(r.values(), &[0.25, -3.0, 2.0]);
        let unit = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(precompute_reciprocals(&unit), unit);
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = CsrMatrix::from_triplets(3, &[(0, 0, 1.5), (2, 0, -0.25), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let back = parse_matrix_market(m.to_matrix_market().as_bytes(), false).unwrap();
        assert_eq!(back, m);
    }
}
