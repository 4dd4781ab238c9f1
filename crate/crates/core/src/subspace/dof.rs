//! Topological lower bounds on the number of degrees of freedom.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::cases::{CaseAssignment, CaseKind, FaceCase};
use crate::mesh::{Mesh, MeshCounts};

/// Mesh family for the closed-form free-vertex table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Quad,
    Hex,
}

impl Family {
    /// The family of a mesh whose faces all have 4 (or all 6) corners.
    pub fn of(mesh: &Mesh) -> Option<Family> {
        let faces = mesh.faces();
        if faces.iter().all(|f| f.len() == 4) {
            Some(Family::Quad)
        } else if faces.iter().all(|f| f.len() == 6) {
            Some(Family::Hex)
        } else {
            None
        }
    }
}

/// Variables minus independent equations for a non-mixed case.
pub fn min_ndof_bound(counts: &MeshCounts, kind: CaseKind) -> i64 {
    let (nv, nf, nc) = (counts.n_v as i64, counts.n_f as i64, counts.n_c as i64);
    match kind {
        CaseKind::Affine => 3 * (nv + 3 * nf - nc),
        CaseKind::Parallel => 3 * nv - nc + nf,
        CaseKind::Vertical => 3 * nv - 2 * (nc - 2 * nf),
    }
}

/// Equations contributed by one k-gon.
fn face_equations(k: usize, case: &FaceCase) -> i64 {
    let k = k as i64;
    match case.kind() {
        CaseKind::Affine => 3 * (k - 3),
        CaseKind::Parallel => k - 1,
        CaseKind::Vertical => 2 * (k - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdofBound {
    pub value: i64,
    /// Set for mixed assignments, where the per-face sum is not a proven bound.
    pub heuristic: bool,
}

/// Bound for an arbitrary assignment: the closed form when non-mixed, else
/// `3 N_v` minus the per-face equation counts.
pub fn min_ndof_bound_for(
    mesh: &Mesh,
    counts: &MeshCounts,
    assignment: &CaseAssignment,
) -> NdofBound {
    match assignment.uniform_kind(mesh) {
        Some(kind) => NdofBound {
            value: min_ndof_bound(counts, kind),
            heuristic: false,
        },
        None => {
            let eq: i64 = (0..mesh.num_faces())
                .map(|f| face_equations(mesh.face(f).len(), &assignment.case(f)))
                .sum();
            NdofBound {
                value: 3 * counts.n_v as i64 - eq,
                heuristic: true,
            }
        }
    }
}

/// Minimal free-vertex count from the closed-form table.
pub fn table1_min_nfv(
    family: Family,
    kind: CaseKind,
    n_v: i64,
    n_b: i64,
    b: i64,
    g: i64,
) -> Rational64 {
    let r = |n: i64, d: i64| Rational64::new(n, d);
    let (v, nb, b, g) = (r(n_v, 1), r(n_b, 1), r(b, 1), r(g, 1));
    match (family, kind) {
        (Family::Quad, CaseKind::Affine) | (Family::Quad, CaseKind::Parallel) => nb / 2 + b + g * 2,
        (Family::Hex, CaseKind::Affine) => -v / 2 + nb * r(3, 4) + b * r(3, 2) + g * 3,
        (Family::Hex, CaseKind::Parallel) => v / 6 + nb * r(5, 12) + b * r(5, 6) + g * r(5, 3),
        (_, CaseKind::Vertical) => -v / 3 + nb * r(2, 3) + b * r(4, 3) + g * r(8, 3),
    }
}

/// A suggested case change for one face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub face: usize,
    pub current: CaseKind,
    pub suggested: CaseKind,
    pub reason: String,
}

/// Reassignment hints: affine faces with more than four corners or touching
/// a degree-3 interior vertex carry many equations per vertex and are
/// candidates for a looser case.
pub fn suggest_reassignments(mesh: &Mesh, assignment: &CaseAssignment) -> Vec<Suggestion> {
    let topo = mesh.topology();
    let boundary: std::collections::HashSet<usize> = topo
        .boundary_halfedges()
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    let mut out = Vec::new();
    for f in 0..mesh.num_faces() {
        let face = mesh.face(f);
        if face.len() == 3 || assignment.case(f).kind() != CaseKind::Affine {
            continue;
        }
        let reason = if face.len() > 4 {
            Some(format!("{}-gon", face.len()))
        } else if let Some(&v) = face
            .iter()
            .find(|&&v| topo.degree(v) == 3 && !boundary.contains(&v))
        {
            Some(format!("interior vertex {v} has degree 3"))
        } else {
            None
        };
        if let Some(reason) = reason {
            out.push(Suggestion {
                face: f,
                current: CaseKind::Affine,
                suggested: CaseKind::Vertical,
                reason,
            });
        }
    }
    out
}
