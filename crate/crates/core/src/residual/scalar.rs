//! Flux differencing for a scalar law on a single operator, `r = (A ∘ F)𝟙`.

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, StoredEntries, Symmetry};

/// `r_i = Σ_j A_ij f(u_i, u_j)` for a symmetric two-point flux `f`. Skew and
/// symmetric operators visit each unordered pair once.
pub fn scalar_residual<A, T, F>(op: &A, u: &[T], f: F) -> Vec<T>
where
    A: StoredEntries,
    T: Scalar,
    F: Fn(T, T) -> T,
{
    let n = op.rows();
    let mut r = vec![T::zero(); n];
    match op.symmetry().sign() {
        Some(s) => {
            for i in 0..n {
                op.for_each_in_row(i, |j, a| {
                    if j > i {
                        let v = f(u[i], u[j]) * a;
                        r[i] += v;
                        r[j] += v * s;
                    } else if j == i {
                        r[i] += f(u[i], u[i]) * a;
                    }
                });
            }
        }
        None => {
            for (i, ri) in r.iter_mut().enumerate() {
                op.for_each_in_row(i, |j, a| *ri += f(u[i], u[j]) * a);
            }
        }
    }
    r
}

/// Jacobian of [`scalar_residual`] given `∂f/∂y`:
/// `J = A ∘ F_y + s diag(1ᵀ(A ∘ F_y))` with `s` the operator's symmetry sign.
pub fn scalar_jacobian<A, F>(op: &A, u: &[f64], dfdy: F) -> Result<DenseMatrix>
where
    A: StoredEntries,
    F: Fn(f64, f64) -> f64,
{
    let n = op.rows();
    let s = op.symmetry().sign().ok_or_else(|| {
        Error::Unsupported(format!("column-sum Jacobian needs a signed operator, got {}", Symmetry::General.name()))
    })?;
    let mut j = DenseMatrix::zeros(n, n);
    let data = j.as_mut_slice();
    for i in 0..n {
        op.for_each_in_row(i, |k, a| {
            let v = a * dfdy(u[i], u[k]);
            data[i * n + k] += v;
            data[k * n + k] += s * v;
        });
    }
    Ok(j)
}
