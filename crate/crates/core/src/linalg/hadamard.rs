//! Hadamard-structured kernels: `(A ∘ K)𝟙` and `A ∘ K` where `K` is given
//! implicitly by a pair kernel `(i, j) -> value` and never materialized.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseOperator, Symmetry};

/// Symmetry of a pair kernel under argument swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSymmetry {
    /// `k(i, j) = k(j, i)` (entropy conservative fluxes)
    Symmetric,
    /// `k(i, j) = -k(j, i)` (dissipative fluxes)
    Antisymmetric,
    None,
}

impl KernelSymmetry {
    pub fn sign(self) -> Option<f64> {
        match self {
            KernelSymmetry::Symmetric => Some(1.0),
            KernelSymmetry::Antisymmetric => Some(-1.0),
            KernelSymmetry::None => None,
        }
    }
}

/// Accumulation strategy for row sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Visit each unordered pair once and scatter to both rows. Requires
    /// signed operator and kernel symmetries; falls back to row-wise otherwise.
    #[default]
    Paired,
    /// Visit every stored entry in row order. This is the reference order
    /// reproduced bit-for-bit by the parallel variant.
    RowWise,
}

/// Read access to the stored entries of an operator, row by row.
pub trait StoredEntries: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn symmetry(&self) -> Symmetry;
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, f: F);
}

impl StoredEntries for SparseOperator {
    fn rows(&self) -> usize {
        SparseOperator::rows(self)
    }

    fn cols(&self) -> usize {
        SparseOperator::cols(self)
    }

    fn symmetry(&self) -> Symmetry {
        SparseOperator::symmetry(self)
    }

    #[inline]
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        for (j, v) in self.row(i) {
            f(j, v);
        }
    }
}

/// Dense matrix carrying a validated symmetry tag. Every entry counts as
/// stored, which is the fast path for small dense operators.
#[derive(Debug, Clone)]
pub struct TaggedDense {
    matrix: DenseMatrix,
    symmetry: Symmetry,
}

impl TaggedDense {
    pub fn new(matrix: DenseMatrix, symmetry: Symmetry) -> Result<Self> {
        if let Some(sign) = symmetry.sign() {
            let n = matrix.rows();
            if matrix.cols() != n {
                return Err(Error::DimensionMismatch("tagged dense operator must be square".into()));
            }
            for i in 0..n {
                for j in 0..n {
                    if matrix[(j, i)] != sign * matrix[(i, j)] {
                        return Err(Error::SymmetryViolation {
                            tag: symmetry.name(),
                            row: i,
                            col: j,
                        });
                    }
                }
            }
        }
        Ok(Self { matrix, symmetry })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl StoredEntries for TaggedDense {
    fn rows(&self) -> usize {
        self.matrix.rows()
    }

    fn cols(&self) -> usize {
        self.matrix.cols()
    }

    fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    #[inline]
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        for (j, &v) in self.matrix.row(i).iter().enumerate() {
            f(j, v);
        }
    }
}

/// Sign relating the mirrored contribution `A_ji k(j, i)` to `A_ij k(i, j)`.
pub(crate) fn mirror_sign(op: Symmetry, kernel: KernelSymmetry) -> Option<f64> {
    Some(op.sign()? * kernel.sign()?)
}

/// `result_i = Σ_j A_ij · kernel(i, j)` over stored entries of `A`.
pub fn hadamard_row_sum<A, K>(
    op: &A,
    kernel: K,
    kernel_symmetry: KernelSymmetry,
    mode: Accumulation,
) -> Result<Vec<f64>>
where
    A: StoredEntries,
    K: Fn(usize, usize) -> f64,
{
    let n = op.rows();
    let mut out = vec![0.0; n];
    let pair_sign = match mode {
        Accumulation::Paired => mirror_sign(op.symmetry(), kernel_symmetry),
        Accumulation::RowWise => None,
    };
    match pair_sign {
        Some(sign) => {
            if op.cols() != n {
                return Err(Error::DimensionMismatch("paired accumulation needs a square operator".into()));
            }
            for i in 0..n {
                op.for_each_in_row(i, |j, a| {
                    if j > i {
                        let val = a * kernel(i, j);
                        out[i] += val;
                        out[j] += sign * val;
                    } else if j == i {
                        out[i] += a * kernel(i, i);
                    }
                });
            }
        }
        None => {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                op.for_each_in_row(i, |j, a| acc += a * kernel(i, j));
                *o = acc;
            }
        }
    }
    Ok(out)
}

/// Row-parallel variant of [`hadamard_row_sum`] in [`Accumulation::RowWise`]
/// order; the result is bit-identical to the serial row-wise sum for any
/// number of worker threads.
pub fn hadamard_row_sum_parallel<A, K>(op: &A, kernel: K) -> Vec<f64>
where
    A: StoredEntries,
    K: Fn(usize, usize) -> f64 + Sync,
{
    (0..op.rows())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            op.for_each_in_row(i, |j, a| acc += a * kernel(i, j));
            acc
        })
        .collect()
}

/// `A ∘ K` on the pattern of `A`. The symmetry tag of `A` is kept when the
/// scaled values still satisfy it.
pub fn hadamard_scale<K>(op: &SparseOperator, kernel: K) -> SparseOperator
where
    K: Fn(usize, usize) -> f64,
{
    let values: Vec<f64> = op.triplets().map(|(i, j, a)| a * kernel(i, j)).collect();
    op.with_values(values.clone(), op.symmetry())
        .or_else(|_| op.with_values(values, Symmetry::General))
        .expect("value count matches pattern")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skew2() -> SparseOperator {
        SparseOperator::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, -1.0)], Symmetry::Skew).unwrap()
    }

    #[test]
    fn constant_kernel_gives_row_sums() {
        let r = hadamard_row_sum(&skew2(), |_, _| 1.0, KernelSymmetry::Symmetric, Accumulation::Paired)
            .unwrap();
        assert_eq!(r, vec![1.0, -1.0]);
    }

    #[test]
    fn scale_by_one_and_zero() {
        let q = skew2();
        assert_eq!(hadamard_scale(&q, |_, _| 1.0), q);
        let z = hadamard_scale(&q, |_, _| 0.0);
        assert!(z.same_pattern(&q));
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn skew_operator_with_antisymmetric_kernel_is_not_paired_wrongly() {
        // skew ∘ antisymmetric is symmetric: mirrored contribution has sign +1
        let q = skew2();
        let k = |i: usize, j: usize| i as f64 - j as f64;
        let paired = hadamard_row_sum(&q, k, KernelSymmetry::Antisymmetric, Accumulation::Paired).unwrap();
        let rows = hadamard_row_sum(&q, k, KernelSymmetry::Antisymmetric, Accumulation::RowWise).unwrap();
        assert_eq!(paired, rows);
    }
}
