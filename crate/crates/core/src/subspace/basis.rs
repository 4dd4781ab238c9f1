use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::assemble::{assemble, ConstraintMatrix};
use super::cases::CaseAssignment;
use super::nullspace::sparse_nullspace;
use crate::error::{PmError, Result};
use crate::mesh::{Mesh, Vec3};

/// Default relative rank cutoff for the global nullspace.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Orthonormal basis `Q` of `null(B)`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    q: DMatrix<f64>,
    tol: f64,
    sigma_max: f64,
    constraints: Arc<ConstraintMatrix>,
}

/// Computes the basis; in the decoupled case once for the per-axis block.
pub fn nullspace_basis(constraints: ConstraintMatrix, tol: f64) -> SubspaceBasis {
    let n3 = constraints.ncols();
    let (q, sigma_max) = match constraints.axis_block() {
        Some(axis) => {
            let r = sparse_nullspace(axis, tol);
            let (n, d) = r.q.shape();
            let mut q = DMatrix::zeros(n3, 3 * d);
            for a in 0..3 {
                q.view_mut((a * n, a * d), (n, d)).copy_from(&r.q);
            }
            (q, r.sigma_max)
        }
        None => {
            let r = sparse_nullspace(constraints.matrix(), tol);
            (r.q, r.sigma_max)
        }
    };
    SubspaceBasis {
        q,
        tol,
        sigma_max,
        constraints: Arc::new(constraints),
    }
}

/// Assembles and factors in one call with default tolerances.
pub fn subspace(mesh: &Mesh, assignment: &CaseAssignment) -> Result<SubspaceBasis> {
    Ok(nullspace_basis(assemble(mesh, assignment)?, DEFAULT_TOL))
}

impl SubspaceBasis {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn ndof(&self) -> usize {
        self.q.ncols()
    }

    pub fn decoupled(&self) -> bool {
        self.constraints.decoupled()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Estimated largest singular value of `B` (per-axis block when decoupled).
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn constraints(&self) -> &ConstraintMatrix {
        &self.constraints
    }

    pub fn source(&self) -> &Mesh {
        self.constraints.source()
    }

    pub fn num_vertices(&self) -> usize {
        self.q.nrows() / 3
    }

    /// Coefficients `Q^T x`.
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.q.tr_mul(x)
    }

    /// `Q w`.
    pub fn expand(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.q * w
    }

    /// `Q Q^T x`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.expand(&self.coords(x))
    }

    /// Dense projector `Q Q^T`; intended for small meshes.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.q * self.q.transpose()
    }

    /// `||B x|| / ||x||` (0 for the zero vector).
    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        let norm = x.norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.constraints.apply(x).norm() / norm
    }

    /// Mesh `source + Q w`.
    pub fn realize(&self, w: &DVector<f64>) -> Result<Mesh> {
        self.source().displaced(&self.expand(w))
    }
}

/// Orthogonal projection onto the subspace.
pub fn project(basis: &SubspaceBasis, field: &DVector<f64>) -> DVector<f64> {
    basis.project(field)
}

/// Coefficients `w` solving `min ||w - w0||` subject to `C w = e` in least
/// squares, where `C` selects rows of `Q`. Returns `w` and the constraint
/// residual.
pub(crate) fn constrained_coords(
    q: &DMatrix<f64>,
    w0: &DVector<f64>,
    rows: &[usize],
    values: &[f64],
) -> (DVector<f64>, f64) {
    if rows.is_empty() {
        return (w0.clone(), 0.0);
    }
    let c = DMatrix::from_fn(rows.len(), q.ncols(), |i, j| q[(rows[i], j)]);
    let e = DVector::from_column_slice(values);
    let rhs = &e - &c * w0;
    let w = if q.ncols() == 0 {
        w0.clone()
    } else {
        w0 + crate::linalg::min_norm_solve(&c, &rhs, 1e-10).0
    };
    let residual = (&c * &w - e).norm();
    (w, residual)
}

/// Closest mesh to `target` in the subspace (as a linear space through the
/// origin of coordinates), with some vertices pinned exactly.
pub fn closest_pm(basis: &SubspaceBasis, target: &Mesh, hard: &[(usize, Vec3)]) -> Result<Mesh> {
    let n = basis.num_vertices();
    if target.num_vertices() != n {
        return Err(PmError::InvalidArgument(
            "target has a different vertex count".into(),
        ));
    }
    let mut rows = Vec::with_capacity(3 * hard.len());
    let mut values = Vec::with_capacity(3 * hard.len());
    for &(v, p) in hard {
        if v >= n {
            return Err(PmError::InvalidArgument(format!("vertex {v} out of range")));
        }
        for a in 0..3 {
            rows.push(a * n + v);
            values.push(p[a]);
        }
    }
    let t = target.to_vec();
    let w0 = basis.coords(&t);
    let (w, residual) = constrained_coords(basis.q(), &w0, &rows, &values);
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if residual > 1e-8 * scale {
        return Err(PmError::Infeasible { residual });
    }
    target.from_vec(&basis.expand(&w))
}

/// Relation between two subspaces of the same mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Disjoint,
    AInB,
    BInA,
    Equal,
    Overlapping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub relation: Containment,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_intersection: usize,
}

/// Compares spans by the singular values of `(I - Q_B Q_B^T) Q_A`.
pub fn containment_check(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<ContainmentReport> {
    if a.q.nrows() != b.q.nrows() {
        return Err(PmError::InvalidArgument(
            "bases live on different meshes".into(),
        ));
    }
    let (da, db) = (a.ndof(), b.ndof());
    let dim_intersection = if da == 0 || db == 0 {
        0
    } else {
        let resid = &a.q - &b.q * b.q.tr_mul(&a.q);
        let sv = crate::linalg::singular_values(&resid);
        // Only min(rows, da) values are reported; the rest are zero.
        let nonzero = sv.iter().filter(|&&s| s > 1e-8).count();
        da - nonzero
    };
    let relation = match (dim_intersection == da, dim_intersection == db) {
        (true, true) => Containment::Equal,
        (true, false) => Containment::AInB,
        (false, true) => Containment::BInA,
        _ if dim_intersection == 0 => Containment::Disjoint,
        _ => Containment::Overlapping,
    };
    Ok(ContainmentReport {
        relation,
        dim_a: da,
        dim_b: db,
        dim_intersection,
    })
}

/// Header of a basis dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisHeader {
    pub rows: usize,
    pub cols: usize,
    pub tol: f64,
    pub ndof: usize,
    pub decoupled: bool,
}

/// Text dump: a JSON header line, then one line per row of `Q`.
pub fn export_basis(basis: &SubspaceBasis) -> String {
    let header = BasisHeader {
        rows: basis.q.nrows(),
        cols: basis.q.ncols(),
        tol: basis.tol,
        ndof: basis.ndof(),
        decoupled: basis.decoupled(),
    };
    write_matrix(
        &serde_json::to_string(&header).expect("serializable"),
        &basis.q,
    )
}

/// A header line followed by one whitespace-separated line per row of `m`.
pub fn write_matrix(header: &str, m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(header.len() + m.len() * 24);
    out.push_str(header);
    out.push('\n');
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.17e}", m[(r, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn save_basis(basis: &SubspaceBasis, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, export_basis(basis)).map_err(|e| PmError::io(path, e))
}

/// Parses a dump written by [`export_basis`].
pub fn parse_basis(text: &str) -> Result<(BasisHeader, DMatrix<f64>)> {
    let mut lines = text.lines();
    let header: BasisHeader = serde_json::from_str(lines.next().unwrap_or(""))?;
    let mut data = Vec::with_capacity(header.rows * header.cols);
    for (i, line) in lines.enumerate().take(header.rows) {
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| PmError::Parse {
                line: i + 2,
                message: format!("bad number '{tok}'"),
            })?);
        }
    }
    if data.len() != header.rows * header.cols {
        return Err(PmError::Parse {
            line: 1,
            message: "matrix size does not match header".into(),
        });
    }
    Ok((
        header.clone(),
        DMatrix::from_row_slice(header.rows, header.cols, &data),
    ))
}
