//! Planar-faced mesh subspaces.
//!
//! Given a source mesh with planar faces and a per-face case, the set of
//! meshes keeping every face planar in the prescribed way is a linear space.
//! This crate builds it and explores it: spectral shapes, sparse and
//! fundamental shapes, handle-driven deformation and edits of the polar dual.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod deform;
pub mod dual;
pub mod error;
mod linalg;
pub mod mesh;
pub mod service;
pub mod shapes;
pub mod subspace;
pub mod verify;

pub use error::{PmError, Result};
pub use mesh::{Mesh, Vec3};
