//! Spanning shapes of a subspace.

mod eigen;
mod fundamental;
mod laplacian;
mod sparse;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::subspace::SubspaceBasis;

pub use eigen::{bandpass_apply, bandpass_displacement, eigenshapes, Spectrum};
pub use fundamental::{fundamental_shape, fundamental_shape_dir, impulse, DEFAULT_LAMBDA};
pub use laplacian::{graph_laplacian, laplacian, Laplacian, LaplacianKind};
pub use sparse::{sparse_pursuit, sparse_shape, support_of, SparsePursuit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeLabel {
    Eigenshape(usize),
    Sparse,
    Fundamental(usize),
}

/// A displacement field on the mesh vertices, with its constraint residual.
#[derive(Debug, Clone)]
pub struct Shape {
    pub displacement: DVector<f64>,
    pub label: ShapeLabel,
    /// `||B d|| / ||d||`.
    pub residual: f64,
}

impl Shape {
    pub(crate) fn new(
        basis: &SubspaceBasis,
        displacement: DVector<f64>,
        label: ShapeLabel,
    ) -> Self {
        let residual = basis.relative_residual(&displacement);
        Shape {
            displacement,
            label,
            residual,
        }
    }
}

/// `source + sum_k alpha_k shape_k` as a displacement.
pub fn combine(shapes: &[Shape], alpha: &[f64]) -> DVector<f64> {
    let n = shapes.first().map_or(0, |s| s.displacement.len());
    shapes
        .iter()
        .zip(alpha)
        .fold(DVector::zeros(n), |acc, (s, a)| acc + &s.displacement * *a)
}
