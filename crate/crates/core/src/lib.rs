//! Entropy-stable flux-differencing discretizations with fast Jacobian
//! assembly, verification oracles and time integrators.

pub mod autodiff;
pub mod error;
pub mod fluxes;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod residual;
pub mod timestepping;

pub use error::{Error, Result};
