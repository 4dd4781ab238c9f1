//! Linear subspaces of planar-faced meshes.
//!
//! Each face carries a case that fixes how it may move relative to the
//! source mesh. The per-face linear constraints are stacked into a sparse
//! matrix `B`; its nullspace is the subspace.

mod assemble;
mod basis;
mod cases;
mod dof;
mod face;
pub(crate) mod nullspace;

pub use assemble::{
    assemble, assemble_with, AssembleOptions, ConstraintMatrix, FaceProvenance,
    DEFAULT_PLANARITY_TOL,
};
pub use basis::{
    closest_pm, containment_check, export_basis, nullspace_basis, parse_basis, project, save_basis, write_matrix,
    subspace, BasisHeader, Containment, ContainmentReport, SubspaceBasis, DEFAULT_TOL,
};
pub use cases::{CaseAssignment, CaseKind, FaceCase};
pub use dof::{
    min_ndof_bound, min_ndof_bound_for, suggest_reassignments, table1_min_nfv, Family, NdofBound,
    Suggestion,
};
pub use face::{build_face_constraints, ConstraintDerivation, FaceBlock};
