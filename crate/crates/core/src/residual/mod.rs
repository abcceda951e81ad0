//! Flux-differencing residuals and their Jacobians.

mod jacobian;
mod scalar;
mod source;
mod system;

pub use jacobian::Variant;
pub use scalar::{scalar_jacobian, scalar_residual};
pub use source::{BurgersManufactured, ShallowWaterManufactured, SourceTerm};
pub use system::{SemiDiscreteSystem, Terms};

/// Field-major vector from per-node states.
pub fn field_major<const N: usize>(nodes: &[[f64; N]]) -> Vec<f64> {
    system::scatter(nodes)
}

/// Per-node states from a field-major vector.
pub fn node_major<const N: usize>(u: &[f64]) -> Vec<[f64; N]> {
    system::gather(u, u.len() / N)
}
