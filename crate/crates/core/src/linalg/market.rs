//! Matrix Market coordinate exchange format (real, general, 1-based).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{SparseOperator, Symmetry};

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Renders `a` in Matrix Market coordinate form. Values use the shortest
/// representation that round-trips exactly.
pub fn to_matrix_market(a: &SparseOperator) -> String {
    let mut s = String::with_capacity(32 * (a.nnz() + 2));
    s.push_str(HEADER);
    s.push('\n');
    let _ = writeln!(s, "{} {} {}", a.rows(), a.cols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v);
    }
    s
}

pub fn export_matrix_market(a: &SparseOperator, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_matrix_market(a)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_matrix_market(text: &str) -> Result<SparseOperator> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::MatrixMarket("empty input".into()))?;
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real general") {
        return Err(Error::MatrixMarket(format!("unsupported header {header:?}")));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size = lines.next().ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::MatrixMarket(format!("bad size line {size:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::MatrixMarket(format!("bad size line {size:?}")));
    };
    let mut trip = Vec::with_capacity(nnz);
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::MatrixMarket(format!("bad entry {line:?}"));
        if t.len() != 3 {
            return Err(bad());
        }
        let i: usize = t[0].parse().map_err(|_| bad())?;
        let j: usize = t[1].parse().map_err(|_| bad())?;
        let v: f64 = t[2].parse().map_err(|_| bad())?;
        if i == 0 || j == 0 {
            return Err(bad());
        }
        trip.push((i - 1, j - 1, v));
    }
    if trip.len() != nnz {
        return Err(Error::MatrixMarket(format!("expected {nnz} entries, found {}", trip.len())));
    }
    SparseOperator::from_triplets(rows, cols, trip, Symmetry::General)
}
