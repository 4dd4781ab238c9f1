use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::mesh::Mesh;

/// Edge weighting of the graph Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `D - A` with unit edge weights.
    #[default]
    Uniform,
    /// Edge weights `1 / |e|` measured on the mesh.
    InverseEdgeLength,
}

/// Symmetric graph Laplacian acting identically on each coordinate axis.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub kind: LaplacianKind,
    /// n x n block for one axis.
    pub axis: CsrMatrix<f64>,
}

pub fn graph_laplacian(mesh: &Mesh) -> Laplacian {
    laplacian(mesh, LaplacianKind::Uniform)
}

pub fn laplacian(mesh: &Mesh, kind: LaplacianKind) -> Laplacian {
    let n = mesh.num_vertices();
    let mut coo = CooMatrix::new(n, n);
    let mut diag = vec![0.0; n];
    for &(a, b) in &mesh.topology().edges {
        let w = match kind {
            LaplacianKind::Uniform => 1.0,
            LaplacianKind::InverseEdgeLength => {
                let len = (mesh.vertex(a) - mesh.vertex(b)).norm();
                if len > 0.0 {
                    1.0 / len
                } else {
                    1.0
                }
            }
        };
        coo.push(a, b, -w);
        coo.push(b, a, -w);
        diag[a] += w;
        diag[b] += w;
    }
    for (i, d) in diag.into_iter().enumerate() {
        coo.push(i, i, d);
    }
    Laplacian {
        kind,
        axis: CsrMatrix::from(&coo),
    }
}

impl Laplacian {
    pub fn num_vertices(&self) -> usize {
        self.axis.nrows()
    }

    /// Applies the operator to a vectorized field `[x.., y.., z..]`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.num_vertices();
        let mut out = DVector::zeros(3 * n);
        for a in 0..3 {
            for (r, row) in self.axis.row_iter().enumerate() {
                out[a * n + r] = row
                    .col_indices()
                    .iter()
                    .zip(row.values())
                    .map(|(&c, &v)| v * x[a * n + c])
                    .sum();
            }
        }
        out
    }

    /// Applies the operator to every column of `m` (3n x d).
    pub fn apply_columns(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for a in 0..3 {
                for (r, row) in self.axis.row_iter().enumerate() {
                    out[(a * n + r, j)] = row
                        .col_indices()
                        .iter()
                        .zip(row.values())
                        .map(|(&c, &v)| v * m[(a * n + c, j)])
                        .sum();
                }
            }
        }
        out
    }

    /// Dense 3n x 3n operator.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut d = DMatrix::zeros(3 * n, 3 * n);
        for (r, row) in self.axis.row_iter().enumerate() {
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                for a in 0..3 {
                    d[(a * n + r, a * n + c)] += v;
                }
            }
        }
        d
    }
}
