//! Polar duals and reconstruction of the primal from an edited dual.
//!
//! With polarity center `c` and radius `r`, face `f` with unit normal `n_f`
//! and plane offset `delta_f = n_f . (p - c)` maps to the dual vertex
//! `c + r^2 n_f / delta_f`. Primal vertex `v` maps to the dual face through
//! the duals of its incident faces; every such dual vertex `u` satisfies
//! `(u - c) . (v - c) = r^2`, which is what reconstruction solves.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};
use crate::mesh::{face_plane, Mesh, Vec3};
use crate::shapes::{bandpass_displacement, eigenshapes, graph_laplacian};
use crate::subspace::{subspace, CaseAssignment, SubspaceBasis};

/// Faces closer than this fraction of the bounding-box diagonal to the
/// center are rejected.
pub const CENTER_CLEARANCE: f64 = 1e-6;
/// Per-vertex residual gate for reconstruction.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Dual mesh plus the polarity that produced it. Dual vertex `f` belongs to
/// primal face `f`; dual face `v` belongs to primal vertex `v`.
#[derive(Debug, Clone)]
pub struct DualMesh {
    pub mesh: Mesh,
    pub center: Vec3,
    pub scale: f64,
}

/// JSON sidecar saved next to a dual OBJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSidecar {
    pub center: [f64; 3],
    pub scale: f64,
    /// Primal face of each dual vertex.
    pub dual_vertex_face: Vec<usize>,
    /// Primal vertex of each dual face.
    pub dual_face_vertex: Vec<usize>,
}

impl DualMesh {
    pub fn sidecar(&self) -> DualSidecar {
        DualSidecar {
            center: [self.center.x, self.center.y, self.center.z],
            scale: self.scale,
            dual_vertex_face: (0..self.mesh.num_vertices()).collect(),
            dual_face_vertex: (0..self.mesh.num_faces()).collect(),
        }
    }

    /// Writes `<path>` (OBJ) and `<path>.json` (sidecar).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        crate::mesh::save_mesh(&self.mesh, path)?;
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&side, text).map_err(|e| PmError::io(&side, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DualMesh> {
        let path = path.as_ref();
        let mesh = crate::mesh::load_mesh(path)?;
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| PmError::io(&side, e))?;
        let s: DualSidecar = serde_json::from_str(&text)?;
        Ok(DualMesh {
            mesh,
            center: Vec3::from(s.center),
            scale: s.scale,
        })
    }

    /// Same polarity, new dual geometry.
    pub fn with_mesh(&self, mesh: Mesh) -> DualMesh {
        DualMesh {
            mesh,
            center: self.center,
            scale: self.scale,
        }
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Signed plane offsets of every face from `c`.
fn offsets(mesh: &Mesh, c: &Vec3) -> Result<Vec<(Vec3, f64)>> {
    (0..mesh.num_faces())
        .map(|f| {
            let p = face_plane(mesh, f)?;
            Ok((p.normal, p.normal.dot(&(p.centroid - c))))
        })
        .collect()
}

fn close_faces(planes: &[(Vec3, f64)], eps: f64) -> Vec<usize> {
    planes
        .iter()
        .enumerate()
        .filter(|(_, (_, d))| d.abs() < eps)
        .map(|(f, _)| f)
        .collect()
}

/// Polar dual about `center` (the vertex centroid when `None`) with radius 1.
pub fn polar_dual(mesh: &Mesh, center: Option<Vec3>) -> Result<DualMesh> {
    polar_dual_with(mesh, center, 1.0)
}

pub fn polar_dual_with(mesh: &Mesh, center: Option<Vec3>, scale: f64) -> Result<DualMesh> {
    if !mesh.is_closed() {
        return Err(PmError::Topology("polar dual needs a closed mesh".into()));
    }
    if !(scale > 0.0) {
        return Err(PmError::InvalidArgument(
            "polarity radius must be positive".into(),
        ));
    }
    let topo = mesh.topology();
    if let Some(v) = (0..mesh.num_vertices()).find(|&v| topo.vertex_faces[v].is_empty()) {
        return Err(PmError::Topology(format!("vertex {v} belongs to no face")));
    }
    let eps = CENTER_CLEARANCE * mesh.bbox_diagonal();
    let (c, planes) = match center {
        Some(c) => {
            let planes = offsets(mesh, &c)?;
            let bad = close_faces(&planes, eps);
            if !bad.is_empty() {
                return Err(PmError::PlaneThroughCenter { faces: bad });
            }
            (c, planes)
        }
        None => auto_center(mesh, eps)?,
    };
    let r2 = scale * scale;
    let vertices: Vec<Vec3> = planes.iter().map(|(n, d)| c + n * (r2 / d)).collect();
    // Following the fan keeps each dual face clockwise seen from outside;
    // reversing it gives outward orientation.
    let faces: Vec<Vec<usize>> = (0..mesh.num_vertices())
        .map(|v| {
            let mut fan = mesh.vertex_fan(v);
            fan.reverse();
            fan
        })
        .collect();
    Ok(DualMesh {
        mesh: Mesh::new(vertices, faces)?,
        center: c,
        scale,
    })
}

/// Vertex centroid, moved toward the mean of the face-plane foot points
/// while some plane passes too close.
fn auto_center(mesh: &Mesh, eps: f64) -> Result<(Vec3, Vec<(Vec3, f64)>)> {
    let c0 = mesh.vertices().iter().sum::<Vec3>() / mesh.num_vertices() as f64;
    let planes = offsets(mesh, &c0)?;
    let bad = close_faces(&planes, eps);
    if bad.is_empty() {
        return Ok((c0, planes));
    }
    let feet = planes.iter().map(|(n, d)| c0 + n * *d).sum::<Vec3>() / planes.len() as f64;
    const STEPS: usize = 16;
    for s in 1..=STEPS {
        let c = c0 + (feet - c0) * (s as f64 / STEPS as f64);
        let planes = offsets(mesh, &c)?;
        if close_faces(&planes, eps).is_empty() {
            log::warn!("polarity center moved to {c:?} to clear face planes {bad:?}");
            return Ok((c, planes));
        }
    }
    Err(PmError::PlaneThroughCenter { faces: bad })
}

/// Per-vertex solution of `(u_f - c) . (v - c) = r^2` over incident faces.
/// `primal` supplies the topology.
pub fn primal_from_dual(dual: &DualMesh, primal: &Mesh) -> Result<Mesh> {
    let (mesh, residuals) = reconstruct(dual, primal)?;
    let bad: Vec<usize> = (0..residuals.len())
        .filter(|&v| residuals[v] > RECONSTRUCTION_TOL)
        .collect();
    if !bad.is_empty() {
        return Err(PmError::InconsistentDual {
            residuals: bad.iter().map(|&v| residuals[v]).collect(),
            vertices: bad,
        });
    }
    Ok(mesh)
}

/// Least-squares reconstruction without the residual gate; residuals are
/// relative to `r^2`.
pub fn reconstruct(dual: &DualMesh, primal: &Mesh) -> Result<(Mesh, Vec<f64>)> {
    if dual.mesh.num_vertices() != primal.num_faces() {
        return Err(PmError::InvalidArgument(format!(
            "dual has {} vertices, primal has {} faces",
            dual.mesh.num_vertices(),
            primal.num_faces()
        )));
    }
    let c = dual.center;
    let r2 = dual.scale * dual.scale;
    let topo = primal.topology();
    let mut positions = Vec::with_capacity(primal.num_vertices());
    let mut residuals = Vec::with_capacity(primal.num_vertices());
    for v in 0..primal.num_vertices() {
        let fs = &topo.vertex_faces[v];
        let a = DMatrix::from_fn(fs.len(), 3, |i, j| (dual.mesh.vertex(fs[i]) - c)[j]);
        let rhs = DVector::from_element(fs.len(), r2);
        let (x, rank) = crate::linalg::min_norm_solve(&a, &rhs, 1e-9);
        let res = (&a * &x - &rhs).norm() / (r2 * (fs.len() as f64).sqrt());
        residuals.push(if rank < 3 { f64::INFINITY } else { res });
        positions.push(c + Vec3::new(x[0], x[1], x[2]));
    }
    Ok((primal.with_vertices(positions)?, residuals))
}

/// Edit applied to the dual before reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum DualEdit {
    /// Add `amplitude` times eigenshape `index` of the dual subspace.
    Eigenshape { index: usize, amplitude: f64 },
    /// Band-pass filter on the dual spectrum.
    Bandpass { low: f64, high: f64, gain: f64 },
    /// Arbitrary dual displacement, projected onto the dual subspace.
    Displacement(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct DualEditResult {
    pub mesh: Mesh,
    pub dual: DualMesh,
    pub edited_dual: DualMesh,
    /// Per primal vertex reconstruction residuals.
    pub residuals: Vec<f64>,
}

/// Dual, edit within the dual's subspace, and reconstruct.
pub fn dual_edit(
    mesh: &Mesh,
    dual_assignment: &CaseAssignment,
    edit: &DualEdit,
) -> Result<DualEditResult> {
    let dual = polar_dual(mesh, None)?;
    let basis = subspace(&dual.mesh, dual_assignment)?;
    let disp = edit_displacement(&basis, edit)?;
    let edited = dual.with_mesh(dual.mesh.displaced(&disp)?);
    let (primal, residuals) = reconstruct(&edited, mesh)?;
    let bad: Vec<usize> = (0..residuals.len())
        .filter(|&v| residuals[v] > RECONSTRUCTION_TOL)
        .collect();
    if !bad.is_empty() {
        return Err(PmError::InconsistentDual {
            residuals: bad.iter().map(|&v| residuals[v]).collect(),
            vertices: bad,
        });
    }
    Ok(DualEditResult {
        mesh: primal,
        dual,
        edited_dual: edited,
        residuals,
    })
}

fn edit_displacement(basis: &SubspaceBasis, edit: &DualEdit) -> Result<DVector<f64>> {
    let n3 = 3 * basis.num_vertices();
    match edit {
        DualEdit::Displacement(d) => {
            if d.len() != n3 {
                return Err(PmError::InvalidArgument(format!(
                    "displacement has length {}, expected {n3}",
                    d.len()
                )));
            }
            Ok(basis.project(d))
        }
        DualEdit::Eigenshape { index, amplitude } => {
            let l = graph_laplacian(basis.source());
            let s = eigenshapes(basis, &l, Some(index + 1));
            let shape = s.shapes.get(*index).ok_or_else(|| {
                PmError::InvalidArgument(format!("dual subspace has only {} shapes", s.len()))
            })?;
            Ok(&shape.displacement * *amplitude)
        }
        DualEdit::Bandpass { low, high, gain } => {
            let l = graph_laplacian(basis.source());
            let s = eigenshapes(basis, &l, None);
            Ok(bandpass_displacement(&s, *low, *high, *gain))
        }
    }
}
