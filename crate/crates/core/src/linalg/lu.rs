use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseOperator};

/// Pivots below `PIVOT_RELATIVE_THRESHOLD * max|a_ij|` declare singularity.
pub const PIVOT_RELATIVE_THRESHOLD: f64 = 1e-14;

/// Systems with fewer unknowns than this are factored densely.
pub const DENSE_LIMIT: usize = 4096;

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let threshold = PIVOT_RELATIVE_THRESHOLD * a.max_abs();
        let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
        let lu = mat.partial_piv_lu();
        let u = lu.U();
        for k in 0..n {
            let pivot = u[(k, k)].abs();
            if !(pivot > threshold) {
                return Err(Error::Singular {
                    column: k,
                    pivot,
                    threshold,
                });
            }
        }
        Ok(Self { n, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs of length {} for an {n}-unknown system",
                b.len()
            )));
        }
        let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }
}

/// Direct factorization of a square system, dense or sparse depending on size.
pub enum LuFactorization {
    Dense(DenseLu),
    Sparse {
        n: usize,
        lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    },
}

impl std::fmt::Debug for LuFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LuFactorization::Dense(d) => write!(f, "LuFactorization::Dense(n = {})", d.n),
            LuFactorization::Sparse { n, .. } => write!(f, "LuFactorization::Sparse(n = {n})"),
        }
    }
}

impl LuFactorization {
    pub fn dense(a: &DenseMatrix) -> Result<Self> {
        DenseLu::factor(a).map(LuFactorization::Dense)
    }

    /// Factors a sparse operator; below [`DENSE_LIMIT`] unknowns the matrix is
    /// densified and factored with partial pivoting.
    pub fn sparse(a: &SparseOperator) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", n, a.cols())));
        }
        if n < DENSE_LIMIT {
            return Self::dense(&a.to_dense());
        }
        Self::sparse_direct(a)
    }

    /// Sparse direct factorization regardless of size.
    pub fn sparse_direct(a: &SparseOperator) -> Result<Self> {
        let n = a.rows();
        let max_abs = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let trip: Vec<Triplet<usize, usize, f64>> =
            a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::DimensionMismatch(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|_| Error::Singular {
            column: 0,
            pivot: 0.0,
            threshold: PIVOT_RELATIVE_THRESHOLD * max_abs,
        })?;
        Ok(LuFactorization::Sparse { n, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            LuFactorization::Dense(d) => d.solve(b),
            LuFactorization::Sparse { n, lu } => {
                if b.len() != *n {
                    return Err(Error::DimensionMismatch(format!(
                        "rhs of length {} for an {n}-unknown system",
                        b.len()
                    )));
                }
                let rhs = faer::Mat::<f64>::from_fn(*n, 1, |i, _| b[i]);
                let x = lu.solve(&rhs);
                let out: Vec<f64> = (0..*n).map(|i| x[(i, 0)]).collect();
                if let Some(i) = out.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Singular {
                        column: i,
                        pivot: 0.0,
                        threshold: 0.0,
                    });
                }
                Ok(out)
            }
        }
    }
}

/// Solves `A x = b` for a dense matrix.
pub fn lu_solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DenseLu::factor(a)?.solve(b)
}

/// Solves `A x = b` for a sparse operator.
pub fn lu_solve(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    LuFactorization::sparse(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let b = vec![0.3, -2.0, 7.5];
        assert_eq!(lu_solve_dense(&DenseMatrix::identity(3), &b).unwrap(), b);
        let d = SparseOperator::diagonal(&[2.0, 4.0]);
        assert_eq!(lu_solve(&d, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_solve_dense(&a, &[1.0, 1.0]), Err(Error::Singular { column: 1, .. })));
    }

    #[test]
    fn sparse_direct_matches_dense() {
        let a = SparseOperator::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 2, 1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 5.0), (1, 2, -1.0)],
            crate::linalg::Symmetry::General,
        )
        .unwrap();
        let b = [1.0, 2.0, 3.0];
        let xs = LuFactorization::sparse_direct(&a).unwrap().solve(&b).unwrap();
        let xd = lu_solve_dense(&a.to_dense(), &b).unwrap();
        for (s, d) in xs.iter().zip(&xd) {
            assert!((s - d).abs() < 1e-14);
        }
    }
}
