use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Declared algebraic symmetry of an operator.
///
/// The tag fixes the sign of the diagonal correction in the flux-differencing
/// Jacobian formulas, so it is carried by the operator rather than passed
/// separately to assembly routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    Skew,
    Symmetric,
    General,
}

impl Symmetry {
    /// `+1` for symmetric, `-1` for skew, `None` for general operators.
    pub fn sign(self) -> Option<f64> {
        match self {
            Symmetry::Skew => Some(-1.0),
            Symmetry::Symmetric => Some(1.0),
            Symmetry::General => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Skew => "skew",
            Symmetry::Symmetric => "symmetric",
            Symmetry::General => "general",
        }
    }
}

/// Sparse real matrix in compressed-row form with sorted, deduplicated
/// column indices inside each row.
///
/// Stored entries define the pattern; explicit zeros are kept so that
/// operators assembled from structural blocks keep their structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicate
    /// positions are summed. The symmetry tag is validated exactly.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I, symmetry: Symmetry) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut trip: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, _) in &trip {
            if i >= rows || j >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
        }
        trip.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            symmetry: Symmetry::General,
        };
        op.with_symmetry(symmetry)
    }

    /// Converts a dense matrix, storing every nonzero entry.
    pub fn from_dense(m: &DenseMatrix, symmetry: Symmetry) -> Result<Self> {
        let trip = (0..m.rows()).flat_map(|i| {
            (0..m.cols()).filter_map(move |j| {
                let v = m[(i, j)];
                (v != 0.0).then_some((i, j, v))
            })
        });
        Self::from_triplets(m.rows(), m.cols(), trip, symmetry)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: values.to_vec(),
            symmetry: Symmetry::Symmetric,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetry: if rows == cols {
                Symmetry::Symmetric
            } else {
                Symmetry::General
            },
        }
    }

    /// Re-tags the operator after checking the claimed symmetry exactly on
    /// the stored pattern (a missing mirror entry counts as zero).
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Result<Self> {
        if symmetry != Symmetry::General {
            if self.rows != self.cols {
                return Err(Error::DimensionMismatch(format!(
                    "{} tag on a {}x{} operator",
                    symmetry.name(),
                    self.rows,
                    self.cols
                )));
            }
            let sign = symmetry.sign().unwrap();
            for i in 0..self.rows {
                for (j, v) in self.row(i) {
                    if self.get(j, i) != sign * v {
                        return Err(Error::SymmetryViolation {
                            tag: symmetry.name(),
                            row: i,
                            col: j,
                        });
                    }
                }
            }
        }
        self.symmetry = symmetry;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.col_idx[start..self.row_ptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Compressed-row storage of the transpose, i.e. the compressed-column
    /// view of `self`.
    pub fn transpose(&self) -> SparseOperator {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseOperator {
            rows: self.cols,
            cols: self.rows,
            row_ptr: counts,
            col_idx,
            values,
            symmetry: self.symmetry,
        }
    }

    pub fn same_pattern(&self, other: &SparseOperator) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// Same pattern with new values.
    pub fn with_values(&self, values: Vec<f64>, symmetry: Symmetry) -> Result<SparseOperator> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a pattern with {} entries",
                values.len(),
                self.nnz()
            )));
        }
        SparseOperator {
            values,
            symmetry: Symmetry::General,
            ..self.clone()
        }
        .with_symmetry(symmetry)
    }

    pub fn scaled(&self, s: f64) -> SparseOperator {
        SparseOperator {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec with {} columns and vector of length {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for (_, j, v) in self.triplets() {
            s[j] += v;
        }
        s
    }

    /// `self + alpha * other` on the union pattern. The result keeps the
    /// common symmetry tag when both operands share it.
    pub fn add_scaled(&self, alpha: f64, other: &SparseOperator) -> Result<SparseOperator> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} plus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let tag = if self.symmetry == other.symmetry {
            self.symmetry
        } else {
            Symmetry::General
        };
        let trip = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, alpha * v)));
        let sum = SparseOperator::from_triplets(self.rows, self.cols, trip, Symmetry::General)?;
        // floating-point sums of mirrored entries stay mirrored, so the tag survives
        sum.with_symmetry(tag)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseOperator {
            rows: self.rows,
            cols: other.cols,
            row_ptr,
            col_idx,
            values,
            symmetry: Symmetry::General,
        })
    }

    /// Block-diagonal operator `I_k ⊗ self`.
    pub fn block_diagonal(&self, k: usize) -> SparseOperator {
        let trip = (0..k).flat_map(|b| {
            self.triplets()
                .map(move |(i, j, v)| (b * self.rows + i, b * self.cols + j, v))
        });
        SparseOperator::from_triplets(k * self.rows, k * self.cols, trip, Symmetry::General)
            .expect("block indices are in range")
    }

    /// Whether every stored position of `self` is also stored in `other`.
    pub fn pattern_within(&self, other: &SparseOperator) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .triplets()
                .all(|(i, j, _)| other.position(i, j).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = SparseOperator::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 4.0)],
            Symmetry::General,
        )
        .unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 5.0);
        assert_eq!(a.col_indices(), &[1, 0, 2]);
    }

    #[test]
    fn skew_tag_is_validated() {
        let ok = SparseOperator::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, -1.0)], Symmetry::Skew);
        assert!(ok.is_ok());
        let bad = SparseOperator::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)], Symmetry::Skew);
        assert!(matches!(bad, Err(Error::SymmetryViolation { .. })));
        let diag = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0)], Symmetry::Skew);
        assert!(diag.is_err());
    }

    #[test]
    fn transpose_and_product() {
        let a = SparseOperator::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)],
            Symmetry::General,
        )
        .unwrap();
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 2.0);
        let p = a.matmul(&at).unwrap().to_dense();
        let expect = a.to_dense().matmul(&a.to_dense().transpose()).unwrap();
        assert_eq!(p, expect);
    }
}
