//! Dense and sparse kernels shared by the discretization and solvers.

mod block;
mod dense;
pub mod hadamard;
mod lu;
pub mod market;
mod sparse;

pub use block::BlockJacobian;
pub use dense::DenseMatrix;
pub use hadamard::{
    hadamard_row_sum, hadamard_row_sum_parallel, hadamard_scale, Accumulation, KernelSymmetry,
    StoredEntries, TaggedDense,
};
pub use lu::{lu_solve, lu_solve_dense, DenseLu, LuFactorization, DENSE_LIMIT, PIVOT_RELATIVE_THRESHOLD};
pub use market::{export_matrix_market, parse_matrix_market, to_matrix_market};
pub use sparse::{SparseOperator, Symmetry};

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
