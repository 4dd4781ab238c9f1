//! Polygon meshes with arbitrary face degree.
//!
//! A [`Mesh`] is immutable once built: vertex positions plus oriented faces,
//! validated to be edge-manifold with consistent orientation. Connectivity
//! queries are served from a [`Topology`] computed at construction and shared
//! between meshes that differ only in geometry.

mod counts;
mod obj;
mod ops;
mod plane;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::{DVector, Vector3};

use crate::error::{PmError, Result};

pub use counts::{counts, MeshCounts};
pub use obj::{load_mesh, parse_obj, save_mesh, write_obj};
pub use ops::{halfedge_subdivide, tutte_flatten, BoundaryShape};
pub(crate) use plane::newell_normal;
pub use plane::{
    face_plane, planarity_error, planarity_report, FacePlane, PlanarityReport, DEGENERACY_RATIO,
};

pub type Vec3 = Vector3<f64>;

/// Connectivity derived from the face lists.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Faces using each edge (one or two).
    pub edge_faces: Vec<Vec<usize>>,
    /// Directed half-edge `(from, to)` to the face that contains it.
    pub halfedges: HashMap<(usize, usize), usize>,
    /// Sorted neighbor lists.
    pub neighbors: Vec<Vec<usize>>,
    /// Faces incident to each vertex, ascending.
    pub vertex_faces: Vec<Vec<usize>>,
}

impl Topology {
    fn build(n: usize, faces: &[Vec<usize>]) -> Result<Self> {
        let mut halfedges = HashMap::new();
        let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, face) in faces.iter().enumerate() {
            let k = face.len();
            for i in 0..k {
                let a = face[i];
                let b = face[(i + 1) % k];
                if halfedges.insert((a, b), fi).is_some() {
                    // Same directed edge twice: either a duplicated face or
                    // an orientation flip between neighbors.
                    return Err(PmError::NonManifoldEdge(a.min(b), a.max(b)));
                }
                let key = (a.min(b), a.max(b));
                let users = edge_map.entry(key).or_default();
                users.push(fi);
                if users.len() > 2 {
                    return Err(PmError::NonManifoldEdge(key.0, key.1));
                }
                vertex_faces[a].push(fi);
            }
        }
        let mut edges = Vec::with_capacity(edge_map.len());
        let mut edge_faces = Vec::with_capacity(edge_map.len());
        let mut neighbors = vec![Vec::new(); n];
        for ((a, b), users) in edge_map {
            edges.push((a, b));
            edge_faces.push(users);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in neighbors.iter_mut().chain(vertex_faces.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Topology {
            edges,
            edge_faces,
            halfedges,
            neighbors,
            vertex_faces,
        })
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e].len() == 1
    }

    /// Boundary edges as directed pairs following the orientation of their face.
    pub fn boundary_halfedges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .edges
            .iter()
            .zip(&self.edge_faces)
            .filter(|(_, users)| users.len() == 1)
            .map(|(&(a, b), _)| {
                if self.halfedges.contains_key(&(a, b)) {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Boundary loops, each as an ordered vertex cycle following face orientation.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let hes = self.boundary_halfedges();
        let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &hes {
            next.entry(a).or_default().push(b);
        }
        let mut used: HashMap<(usize, usize), bool> = hes.iter().map(|&h| (h, false)).collect();
        let mut loops = Vec::new();
        for &(a0, b0) in &hes {
            if used[&(a0, b0)] {
                continue;
            }
            let mut lp = vec![a0];
            let (mut a, mut b) = (a0, b0);
            loop {
                used.insert((a, b), true);
                if b == a0 {
                    break;
                }
                lp.push(b);
                let cand = next
                    .get(&b)
                    .and_then(|list| list.iter().copied().find(|&c| !used[&(b, c)]));
                match cand {
                    Some(c) => {
                        a = b;
                        b = c;
                    }
                    None => break,
                }
            }
            loops.push(lp);
        }
        loops
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

/// Vertex geometry plus oriented polygonal faces.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Arc<Vec<Vec<usize>>>,
    topology: Arc<Topology>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl Mesh {
    /// Builds and validates a mesh.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Result<Self> {
        let n = vertices.len();
        for (fi, face) in faces.iter().enumerate() {
            if face.len() < 3 {
                return Err(PmError::InvalidMesh(format!(
                    "face {fi} has {} vertices",
                    face.len()
                )));
            }
            for (i, &v) in face.iter().enumerate() {
                if v >= n {
                    return Err(PmError::InvalidMesh(format!(
                        "face {fi} references vertex {v} but mesh has {n} vertices"
                    )));
                }
                if face[..i].contains(&v) {
                    return Err(PmError::InvalidMesh(format!(
                        "face {fi} repeats vertex {v}"
                    )));
                }
            }
        }
        if vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(PmError::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let topology = Topology::build(n, &faces)?;
        Ok(Mesh {
            vertices,
            faces: Arc::new(faces),
            topology: Arc::new(topology),
        })
    }

    pub fn from_arrays(vertices: &[[f64; 3]], faces: &[&[usize]]) -> Result<Self> {
        Mesh::new(
            vertices
                .iter()
                .map(|p| Vec3::new(p[0], p[1], p[2]))
                .collect(),
            faces.iter().map(|f| f.to_vec()).collect(),
        )
    }

    /// Same topology, new geometry.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(PmError::InvalidArgument(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Mesh {
            vertices,
            faces: Arc::clone(&self.faces),
            topology: Arc::clone(&self.topology),
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &[usize] {
        &self.faces[f]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn same_topology(&self, other: &Mesh) -> bool {
        Arc::ptr_eq(&self.faces, &other.faces) || self.faces == other.faces
    }

    pub fn is_closed(&self) -> bool {
        self.topology.edge_faces.iter().all(|u| u.len() == 2)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }

    pub fn face_points(&self, f: usize) -> Vec<Vec3> {
        self.faces[f].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Vectorized coordinates with layout `[x_1..x_n, y_1..y_n, z_1..z_n]`.
    pub fn to_vec(&self) -> DVector<f64> {
        let n = self.vertices.len();
        DVector::from_fn(3 * n, |i, _| self.vertices[i % n][i / n])
    }

    /// Inverse of [`Mesh::to_vec`] on this topology.
    pub fn from_vec(&self, x: &DVector<f64>) -> Result<Mesh> {
        let n = self.vertices.len();
        if x.len() != 3 * n {
            return Err(PmError::InvalidArgument(format!(
                "vector has length {}, expected {}",
                x.len(),
                3 * n
            )));
        }
        self.with_vertices(
            (0..n)
                .map(|i| Vec3::new(x[i], x[n + i], x[2 * n + i]))
                .collect(),
        )
    }

    /// `self + displacement` with the vectorized layout.
    pub fn displaced(&self, displacement: &DVector<f64>) -> Result<Mesh> {
        self.from_vec(&(self.to_vec() + displacement))
    }

    /// Faces incident to `v`, ordered as a fan following the mesh orientation.
    ///
    /// Consecutive faces share an edge. For interior vertices the fan is
    /// cyclic; for boundary vertices it runs from one boundary edge to the
    /// other.
    pub fn vertex_fan(&self, v: usize) -> Vec<usize> {
        let topo = &self.topology;
        let incident = &topo.vertex_faces[v];
        if incident.is_empty() {
            return Vec::new();
        }
        let prev_of = |f: usize| {
            let face = &self.faces[f];
            let k = face.len();
            let i = face.iter().position(|&u| u == v).expect("vertex in face");
            face[(i + k - 1) % k]
        };
        let next_of = |f: usize| {
            let face = &self.faces[f];
            let k = face.len();
            let i = face.iter().position(|&u| u == v).expect("vertex in face");
            face[(i + 1) % k]
        };
        // Start at a face whose incoming edge is on the boundary, if any, so
        // open fans come out complete.
        let start = incident
            .iter()
            .copied()
            .find(|&f| !topo.halfedges.contains_key(&(v, prev_of(f))))
            .unwrap_or(incident[0]);
        let mut fan = vec![start];
        let mut f = start;
        // f holds v -> next; the face across that edge holds next -> v.
        loop {
            let nb = next_of(f);
            match topo.halfedges.get(&(nb, v)) {
                Some(&g) if g != start && !fan.contains(&g) => {
                    fan.push(g);
                    f = g;
                }
                _ => break,
            }
        }
        fan
    }
}
