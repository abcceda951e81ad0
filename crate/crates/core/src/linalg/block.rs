use crate::error::{Error, Result};
use crate::linalg::{SparseOperator, Symmetry};

/// `n_fields × n_fields` grid of sparse blocks over global nodes.
///
/// Block `(a, b)` holds `∂r_a / ∂u_b`. The flattened matrix uses field-major
/// ordering: row `a * nodes + i`, column `b * nodes + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockJacobian {
    n_fields: usize,
    nodes: usize,
    blocks: Vec<SparseOperator>,
}

impl BlockJacobian {
    /// `blocks` in row-major block order, all `nodes × nodes`.
    pub fn new(n_fields: usize, blocks: Vec<SparseOperator>) -> Result<Self> {
        if blocks.len() != n_fields * n_fields || n_fields == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for {n_fields} fields",
                blocks.len()
            )));
        }
        let nodes = blocks[0].rows();
        if blocks.iter().any(|b| b.rows() != nodes || b.cols() != nodes) {
            return Err(Error::DimensionMismatch("Jacobian blocks differ in size".into()));
        }
        Ok(Self {
            n_fields,
            nodes,
            blocks,
        })
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn block(&self, a: usize, b: usize) -> &SparseOperator {
        &self.blocks[a * self.n_fields + b]
    }

    pub fn blocks(&self) -> &[SparseOperator] {
        &self.blocks
    }

    pub fn flatten(&self) -> SparseOperator {
        if self.n_fields == 1 {
            return self.blocks[0].clone();
        }
        let (n, m) = (self.n_fields, self.nodes);
        let trip = (0..n).flat_map(|a| {
            (0..n).flat_map(move |b| {
                self.block(a, b)
                    .triplets()
                    .map(move |(i, j, v)| (a * m + i, b * m + j, v))
            })
        });
        SparseOperator::from_triplets(n * m, n * m, trip, Symmetry::General)
            .expect("block indices are in range")
    }

    /// Splits a flat field-major matrix back into blocks.
    pub fn from_flat(flat: &SparseOperator, n_fields: usize) -> Result<Self> {
        if n_fields == 0 || flat.rows() != flat.cols() || flat.rows() % n_fields != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot be split into {n_fields} fields",
                flat.rows(),
                flat.cols()
            )));
        }
        let m = flat.rows() / n_fields;
        let mut trips: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_fields * n_fields];
        for (i, j, v) in flat.triplets() {
            trips[(i / m) * n_fields + j / m].push((i % m, j % m, v));
        }
        let blocks = trips
            .into_iter()
            .map(|t| SparseOperator::from_triplets(m, m, t, Symmetry::General))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_fields, blocks)
    }

    /// `J w` with `w` in field-major ordering.
    pub fn matvec(&self, w: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = (self.n_fields, self.nodes);
        if w.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {n} fields on {m} nodes",
                w.len()
            )));
        }
        let mut out = vec![0.0; n * m];
        for a in 0..n {
            for b in 0..n {
                let y = self.block(a, b).matvec(&w[b * m..(b + 1) * m])?;
                for (o, v) in out[a * m..(a + 1) * m].iter_mut().zip(y) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_field_flatten_is_identity() {
        let b = SparseOperator::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 1, 1.0)], Symmetry::General)
            .unwrap();
        let j = BlockJacobian::new(1, vec![b.clone()]).unwrap();
        assert_eq!(j.flatten(), b);
    }
}
