//! Reference-element and global summation-by-parts operators.

mod global;
pub mod reference;

pub use global::{
    assemble_global_modal, assemble_global_nonperiodic, assemble_global_periodic, fv_nonperiodic,
    fv_periodic, single_element_periodic, tensor2d_affine, Boundary, BoundaryPolicy, Coupling,
    GlobalDiscretization, Mesh1D, Mesh2D, ModalGlobal, SchemeKind,
};
pub use reference::{
    differentiation_matrix, gauss_legendre, gauss_lobatto, interpolation_matrix, lobatto_sbp, modal_reference,
    orthonormal_legendre, ModalData, ReferenceElement,
};
