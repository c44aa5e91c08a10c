//! Linear FEM modal analysis and the modal shape code.
//!
//! The generalized problem `Kφ = λMφ` is reduced to a standard symmetric one
//! through the diagonal lumped mass. The six rigid modes are dropped and the
//! remaining columns are re-orthonormalized in the Euclidean inner product,
//! so that [`encode_fem`] is an exact least-squares projection.

mod basis;
mod eigen;
mod fem;
pub mod sparse;

pub use basis::{encode_fem, ModalBasis, BASIS_FORMAT_VERSION};
pub use eigen::{
    compute_linear_modes, compute_linear_modes_with, generalized_residual, EigenMethod, ModalSolve, RESIDUAL_TOL,
    RIGID_EPS,
};
pub use fem::{assemble_fem_system, element_stiffness, FemSystem, MaterialParams};
