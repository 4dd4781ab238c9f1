//! Summary of a mesh and its subspace under an assignment.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::mesh::{counts, planarity_report, Mesh, MeshCounts};
use crate::subspace::{
    min_ndof_bound_for, suggest_reassignments, table1_min_nfv, CaseAssignment, Family, NdofBound, Suggestion,
    SubspaceBasis,
};
use crate::verify::{case_containments, ContainmentFlag};

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub counts: MeshCounts,
    pub family: Option<Family>,
    pub assignment: Value,
    pub mixed: bool,
    pub ndof: usize,
    pub nfv: f64,
    pub min_ndof_bound: NdofBound,
    /// Closed-form minimal free-vertex count (non-mixed quad or hex meshes).
    pub table1_min_nfv: Option<String>,
    pub source_planarity: f64,
    pub fallback_faces: Vec<usize>,
    pub suggestions: Vec<Suggestion>,
    /// Filled on request; needs the three non-mixed bases.
    pub containments: Option<Vec<ContainmentFlag>>,
}

pub fn analyze(mesh: &Mesh, assignment: &CaseAssignment, basis: &SubspaceBasis, with_containments: bool) -> Result<Analysis> {
    let c = counts(mesh);
    let family = Family::of(mesh);
    let kind = assignment.uniform_kind(mesh);
    let table = match (family, kind) {
        (Some(f), Some(k)) => Some(table1_min_nfv(f, k, c.n_v as i64, c.n_b as i64, c.b as i64, c.g_paper).to_string()),
        _ => None,
    };
    Ok(Analysis {
        counts: c,
        family,
        assignment: assignment.to_json(),
        mixed: kind.is_none(),
        ndof: basis.ndof(),
        nfv: basis.ndof() as f64 / 3.0,
        min_ndof_bound: min_ndof_bound_for(mesh, &c, assignment),
        table1_min_nfv: table,
        source_planarity: planarity_report(mesh)?.max,
        fallback_faces: basis.constraints().fallback_faces(),
        suggestions: suggest_reassignments(mesh, assignment),
        containments: if with_containments { Some(case_containments(mesh)?) } else { None },
    })
}
