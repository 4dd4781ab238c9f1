use serde::{Deserialize, Serialize};

use super::Mesh;

/// Combinatorial counts used by the degree-of-freedom bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshCounts {
    pub n_v: usize,
    pub n_e: usize,
    pub n_f: usize,
    /// Corners: sum of face lengths.
    pub n_c: usize,
    /// Vertices on a boundary edge.
    pub n_b: usize,
    /// Boundary loops.
    pub b: usize,
    /// Genus under the convention `N_v - N_e + N_f - b = 2 g`. This gives
    /// `g = 1` for a sphere-like closed mesh; it is reported as-is.
    pub g_paper: i64,
}

pub fn counts(mesh: &Mesh) -> MeshCounts {
    let topo = mesh.topology();
    let n_v = mesh.num_vertices();
    let n_e = topo.edges.len();
    let n_f = mesh.num_faces();
    let n_c = mesh.faces().iter().map(Vec::len).sum();
    let mut on_boundary = vec![false; n_v];
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        if topo.is_boundary_edge(e) {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    let n_b = on_boundary.iter().filter(|&&x| x).count();
    let b = topo.boundary_loops().len();
    let euler = n_v as i64 - n_e as i64 + n_f as i64 - b as i64;
    MeshCounts {
        n_v,
        n_e,
        n_f,
        n_c,
        n_b,
        b,
        g_paper: euler.div_euclid(2),
    }
}
