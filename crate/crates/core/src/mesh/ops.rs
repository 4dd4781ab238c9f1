use std::collections::HashMap;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use super::{Mesh, Vec3};
use crate::error::{PmError, Result};

/// Inserts a vertex at every edge midpoint; each k-gon becomes a 2k-gon.
///
/// New vertices are appended after the original ones, in edge order.
pub fn halfedge_subdivide(mesh: &Mesh) -> Mesh {
    let topo = mesh.topology();
    let n = mesh.num_vertices();
    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(topo.edges.len());
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        vertices.push((mesh.vertex(a) + mesh.vertex(b)) * 0.5);
        midpoint.insert((a, b), n + e);
    }
    let faces = mesh
        .faces()
        .iter()
        .map(|face| {
            let k = face.len();
            let mut out = Vec::with_capacity(2 * k);
            for i in 0..k {
                let (a, b) = (face[i], face[(i + 1) % k]);
                out.push(a);
                out.push(midpoint[&(a.min(b), a.max(b))]);
            }
            out
        })
        .collect();
    Mesh::new(vertices, faces).expect("subdivision preserves validity")
}

/// Target outline for [`tutte_flatten`], counter-clockwise in the xy-plane.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryShape {
    /// Boundary vertices evenly spaced on the unit circle.
    Circle,
    /// The unit square `[0,1]^2`.
    Square,
    /// An arbitrary convex polygon.
    Polygon(Vec<[f64; 2]>),
}

impl BoundaryShape {
    /// Places `m` points evenly (by arc length) along the outline, starting at
    /// its first corner.
    fn sample(&self, m: usize) -> Result<Vec<[f64; 2]>> {
        let poly = match self {
            BoundaryShape::Circle => {
                return Ok((0..m)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / m as f64;
                        [t.cos(), t.sin()]
                    })
                    .collect())
            }
            BoundaryShape::Square => vec![[0., 0.], [1., 0.], [1., 1.], [0., 1.]],
            BoundaryShape::Polygon(p) => p.clone(),
        };
        check_convex(&poly)?;
        let k = poly.len();
        let lengths: Vec<f64> = (0..k)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % k]);
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .collect();
        let total: f64 = lengths.iter().sum();
        let mut out = Vec::with_capacity(m);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for i in 0..m {
            let s = total * i as f64 / m as f64;
            while seg + 1 < k && s >= seg_start + lengths[seg] - 1e-14 * total {
                seg_start += lengths[seg];
                seg += 1;
            }
            let t = ((s - seg_start) / lengths[seg]).clamp(0.0, 1.0);
            let (a, b) = (poly[seg], poly[(seg + 1) % k]);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        Ok(out)
    }
}

fn check_convex(poly: &[[f64; 2]]) -> Result<()> {
    let k = poly.len();
    if k < 3 {
        return Err(PmError::InvalidArgument(
            "boundary polygon needs 3 corners".into(),
        ));
    }
    for i in 0..k {
        let (a, b, c) = (poly[i], poly[(i + 1) % k], poly[(i + 2) % k]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross <= 0.0 {
            return Err(PmError::InvalidArgument(
                "boundary polygon must be convex and counter-clockwise".into(),
            ));
        }
    }
    Ok(())
}

/// Tutte embedding of a disk-topology mesh: boundary pinned to a convex
/// outline, interior vertices at the average of their neighbors, z = 0.
pub fn tutte_flatten(mesh: &Mesh, boundary_shape: &BoundaryShape) -> Result<Mesh> {
    let topo = mesh.topology();
    let loops = topo.boundary_loops();
    let n = mesh.num_vertices();
    let chi = n as i64 - topo.edges.len() as i64 + mesh.num_faces() as i64;
    if loops.len() != 1 || chi != 1 {
        return Err(PmError::Topology(format!(
            "tutte embedding needs a disk (found {} boundary loops, Euler characteristic {chi})",
            loops.len()
        )));
    }
    let boundary = &loops[0];
    let placed = boundary_shape.sample(boundary.len())?;
    let mut pos = vec![Vec3::zeros(); n];
    let mut interior_index = vec![usize::MAX; n];
    for (v, p) in boundary.iter().zip(&placed) {
        pos[*v] = Vec3::new(p[0], p[1], 0.0);
    }
    let mut ni = 0;
    for v in 0..n {
        if !boundary.contains(&v) && !topo.neighbors[v].is_empty() {
            interior_index[v] = ni;
            ni += 1;
        }
    }
    if ni > 0 {
        let mut coo = CooMatrix::new(ni, ni);
        let mut rhs = DMatrix::zeros(ni, 2);
        for v in 0..n {
            let i = interior_index[v];
            if i == usize::MAX {
                continue;
            }
            let nbrs = &topo.neighbors[v];
            coo.push(i, i, nbrs.len() as f64);
            for &u in nbrs {
                let j = interior_index[u];
                if j == usize::MAX {
                    rhs[(i, 0)] += pos[u].x;
                    rhs[(i, 1)] += pos[u].y;
                } else {
                    coo.push(i, j, -1.0);
                }
            }
        }
        let csc = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&csc)
            .map_err(|e| PmError::Topology(format!("tutte system not positive definite: {e}")))?;
        let sol = chol.solve(&rhs);
        for v in 0..n {
            let i = interior_index[v];
            if i != usize::MAX {
                pos[v] = Vec3::new(sol[(i, 0)], sol[(i, 1)], 0.0);
            }
        }
    }
    mesh.with_vertices(pos)
}
