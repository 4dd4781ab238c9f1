//! Generators for the reference meshes used in tests, examples and audits.
//!
//! Every generator returns a valid, consistently oriented mesh whose faces are
//! planar to machine precision (except where noted).

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dual::polar_dual;
use crate::mesh::{Mesh, Vec3};

fn mesh(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Mesh {
    Mesh::new(vertices, faces).expect("corpus generator produced an invalid mesh")
}

/// Unit cube `[0,1]^3` with outward-facing quads.
pub fn cube() -> Mesh {
    scaled_cube(0.0, 1.0)
}

/// Cube with corners at `(±h, ±h, ±h)`.
pub fn centered_cube(h: f64) -> Mesh {
    scaled_cube(-h, h)
}

fn scaled_cube(lo: f64, hi: f64) -> Mesh {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    mesh(
        vec![
            v(lo, lo, lo),
            v(hi, lo, lo),
            v(hi, hi, lo),
            v(lo, hi, lo),
            v(lo, lo, hi),
            v(hi, lo, hi),
            v(hi, hi, hi),
            v(lo, hi, hi),
        ],
        vec![
            vec![0, 3, 2, 1],
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
        ],
    )
}

/// The unit cube with its top face removed (an open box).
pub fn cube_minus_face() -> Mesh {
    let c = cube();
    submesh(&c, &[0, 2, 3, 4, 5])
}

/// Flat grid of `nx × ny` unit quads in the plane z = 0, counter-clockwise
/// seen from +z. Vertex `(i, j)` has index `j * (nx + 1) + i`.
pub fn quad_grid(nx: usize, ny: usize) -> Mesh {
    grid_with(nx, ny, |i, j| Vec3::new(i as f64, j as f64, 0.0))
}

/// Non-flat quad grid with uneven spacing and heights `z = f(x) + g(y)`,
/// which keeps every quad exactly planar.
pub fn wavy_grid(nx: usize, ny: usize) -> Mesh {
    grid_with(nx, ny, |i, j| {
        let x = i as f64 + 0.2 * (0.9 * i as f64).sin();
        let y = j as f64 + 0.15 * (1.3 * j as f64).cos();
        let z = 0.6 * (0.7 * x).sin() + 0.4 * (0.45 * y).cos() + 0.05 * x;
        Vec3::new(x, y, z)
    })
}

fn grid_with(nx: usize, ny: usize, pos: impl Fn(usize, usize) -> Vec3) -> Mesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(pos(i, j));
        }
    }
    let mut faces = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push(vec![
                idx(i, j),
                idx(i + 1, j),
                idx(i + 1, j + 1),
                idx(i, j + 1),
            ]);
        }
    }
    mesh(vertices, faces)
}

/// A single row of `n` quads.
pub fn quad_strip(n: usize) -> Mesh {
    quad_grid(n, 1)
}

/// Quad torus of revolution; its quads are isosceles trapezoids, hence planar.
pub fn quad_torus(n_major: usize, n_minor: usize, major: f64, minor: f64) -> Mesh {
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let theta = std::f64::consts::TAU * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let phi = std::f64::consts::TAU * j as f64 / n_minor as f64;
            let rho = major + minor * phi.cos();
            vertices.push(Vec3::new(
                rho * theta.cos(),
                rho * theta.sin(),
                minor * phi.sin(),
            ));
        }
    }
    let mut faces = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            faces.push(vec![
                idx(i, j),
                idx(i + 1, j),
                idx(i + 1, j + 1),
                idx(i, j + 1),
            ]);
        }
    }
    mesh(vertices, faces)
}

fn hex_corners(q: i64, r: i64) -> Vec<Vec3> {
    let s3 = 3f64.sqrt();
    let cx = s3 * (q as f64 + r as f64 / 2.0);
    let cy = 1.5 * r as f64;
    (0..6)
        .map(|i| {
            let t = std::f64::consts::FRAC_PI_6 + std::f64::consts::FRAC_PI_3 * i as f64;
            Vec3::new(cx + t.cos(), cy + t.sin(), 0.0)
        })
        .collect()
}

fn hex_cells(cells: &[(i64, i64)]) -> Mesh {
    let mut keys: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for &(q, r) in cells {
        let face = hex_corners(q, r)
            .into_iter()
            .map(|p| {
                let key = ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64);
                *keys.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                })
            })
            .collect();
        faces.push(face);
    }
    mesh(vertices, faces)
}

/// Flat hexagonal patch: all cells within `rings` steps of a central hexagon.
pub fn hex_patch(rings: i64) -> Mesh {
    let mut cells = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            if (q + r).abs() <= rings {
                cells.push((q, r));
            }
        }
    }
    hex_cells(&cells)
}

/// `n` hexagons in a row.
pub fn hex_strip(n: usize) -> Mesh {
    hex_cells(&(0..n as i64).map(|q| (q, 0)).collect::<Vec<_>>())
}

/// Keeps only the listed faces and drops unreferenced vertices.
pub fn submesh(source: &Mesh, faces: &[usize]) -> Mesh {
    let mut remap = BTreeMap::new();
    for &f in faces {
        for &v in source.face(f) {
            remap.insert(v, 0usize);
        }
    }
    let vertices: Vec<Vec3> = remap.keys().map(|&v| source.vertex(v)).collect();
    for (i, slot) in remap.values_mut().enumerate() {
        *slot = i;
    }
    let faces = faces
        .iter()
        .map(|&f| source.face(f).iter().map(|v| remap[v]).collect())
        .collect();
    mesh(vertices, faces)
}

/// Convex hull of a small point set by exhaustive plane search. Coplanar
/// hull points are merged into a single polygonal face.
pub fn convex_hull(points: &[Vec3]) -> Mesh {
    let n = points.len();
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-9 * scale;
    let mut seen: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    let mut faces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut normal = (points[j] - points[i]).cross(&(points[k] - points[i]));
                if normal.norm() < eps {
                    continue;
                }
                normal.normalize_mut();
                let d: Vec<f64> = points
                    .iter()
                    .map(|p| normal.dot(&(p - points[i])))
                    .collect();
                let above = d.iter().any(|&x| x > eps);
                let below = d.iter().any(|&x| x < -eps);
                if above && below {
                    continue;
                }
                if above {
                    normal = -normal;
                }
                let on: Vec<usize> = (0..n).filter(|&v| d[v].abs() <= eps).collect();
                if seen.insert(on.clone(), ()).is_some() {
                    continue;
                }
                let c = on.iter().map(|&v| points[v]).sum::<Vec3>() / on.len() as f64;
                let u = (points[on[0]] - c).normalize();
                let w = normal.cross(&u);
                let mut ordered = on.clone();
                ordered.sort_by(|&a, &b| {
                    let ang = |v: usize| {
                        let p = points[v] - c;
                        p.dot(&w).atan2(p.dot(&u))
                    };
                    ang(a).total_cmp(&ang(b))
                });
                faces.push(ordered);
            }
        }
    }
    mesh(points.to_vec(), faces)
}

fn sign_combos(base: [f64; 3]) -> Vec<Vec3> {
    let mut out = Vec::new();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                let p = Vec3::new(base[0] * sx, base[1] * sy, base[2] * sz);
                if !out.iter().any(|q: &Vec3| (q - p).norm() < 1e-12) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn cyclic(base: [f64; 3]) -> Vec<Vec3> {
    let mut out = Vec::new();
    for b in [
        base,
        [base[1], base[2], base[0]],
        [base[2], base[0], base[1]],
    ] {
        for p in sign_combos(b) {
            if !out.iter().any(|q: &Vec3| (q - p).norm() < 1e-12) {
                out.push(p);
            }
        }
    }
    out
}

pub fn octahedron() -> Mesh {
    convex_hull(&cyclic([1.0, 0.0, 0.0]))
}

pub fn icosahedron() -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    convex_hull(&cyclic([0.0, 1.0, phi]))
}

/// Regular dodecahedron: closed, 3-regular, pentagonal faces.
pub fn dodecahedron() -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = sign_combos([1.0, 1.0, 1.0]);
    pts.extend(cyclic([0.0, 1.0 / phi, phi]));
    convex_hull(&pts)
}

/// Truncated octahedron: closed, 3-regular, six squares and eight hexagons.
pub fn truncated_octahedron() -> Mesh {
    let mut pts = Vec::new();
    for perm in [
        [0., 1., 2.],
        [0., 2., 1.],
        [1., 0., 2.],
        [1., 2., 0.],
        [2., 0., 1.],
        [2., 1., 0.],
    ] {
        for p in sign_combos(perm) {
            if !pts.iter().any(|q: &Vec3| (q - p).norm() < 1e-12) {
                pts.push(p);
            }
        }
    }
    convex_hull(&pts)
}

/// Hexagonal prism: closed and 3-regular.
pub fn hexagonal_prism() -> Mesh {
    let pts: Vec<Vec3> = [-1.0, 1.0]
        .iter()
        .flat_map(|&z| {
            (0..6).map(move |i| {
                let t = std::f64::consts::FRAC_PI_3 * i as f64;
                Vec3::new(t.cos(), t.sin(), z)
            })
        })
        .collect();
    convex_hull(&pts)
}

/// Rhombic dodecahedron: closed quad mesh with vertices of degree 3 and 4.
pub fn rhombic_dodecahedron() -> Mesh {
    let mut pts = sign_combos([1.0, 1.0, 1.0]);
    pts.extend(cyclic([2.0, 0.0, 0.0]));
    convex_hull(&pts)
}

/// Icosahedron with every triangle split into `freq^2` triangles, projected
/// to the unit sphere.
pub fn geodesic_sphere(freq: usize) -> Mesh {
    let ico = icosahedron();
    let mut keys: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut id = |p: Vec3| {
        let p = p.normalize();
        let key = (
            (p.x * 1e9).round() as i64,
            (p.y * 1e9).round() as i64,
            (p.z * 1e9).round() as i64,
        );
        *keys.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut faces = Vec::new();
    for face in ico.faces() {
        let (a, b, c) = (
            ico.vertex(face[0]),
            ico.vertex(face[1]),
            ico.vertex(face[2]),
        );
        let f = freq as f64;
        let pt = |i: usize, j: usize| a + (b - a) * (i as f64 / f) + (c - a) * (j as f64 / f);
        let mut grid = HashMap::new();
        for i in 0..=freq {
            for j in 0..=freq - i {
                grid.insert((i, j), id(pt(i, j)));
            }
        }
        for i in 0..freq {
            for j in 0..freq - i {
                faces.push(vec![grid[&(i, j)], grid[&(i + 1, j)], grid[&(i, j + 1)]]);
                if i + j + 1 < freq {
                    faces.push(vec![
                        grid[&(i + 1, j)],
                        grid[&(i + 1, j + 1)],
                        grid[&(i, j + 1)],
                    ]);
                }
            }
        }
    }
    mesh(vertices, faces)
}

/// Goldberg-style polyhedron: polar dual of a geodesic sphere. Closed,
/// 3-regular, twelve pentagons and the rest hexagons.
pub fn goldberg(freq: usize) -> Mesh {
    polar_dual(&geodesic_sphere(freq), None)
        .expect("geodesic sphere has a valid polar dual")
        .mesh
}

/// Upper half of [`goldberg`]: a hexagon-dominant cap with one boundary.
pub fn hex_half_sphere(freq: usize) -> Mesh {
    let g = goldberg(freq);
    let keep: Vec<usize> = (0..g.num_faces())
        .filter(|&f| {
            let pts = g.face_points(f);
            let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
            c.z > 0.05 * c.norm()
        })
        .collect();
    submesh(&g, &keep)
}

/// Closed, generic 3-regular polyhedron: the polar dual of the convex hull of
/// random points on the unit sphere. Point sets whose dual has a triangle
/// (a hull vertex of degree 3) are redrawn, since triangles carry no
/// constraints.
pub fn irregular_cubic_solid(seed: u64, n_points: usize) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pts: Vec<Vec3> = (0..n_points)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                Vec3::new(r * t.cos(), r * t.sin(), z)
            })
            .collect();
        let mesh = polar_dual(&convex_hull(&pts), None)
            .expect("hull of sphere points contains the origin")
            .mesh;
        if mesh.faces().iter().all(|f| f.len() > 3) {
            return mesh;
        }
    }
}

/// Random perturbation of every vertex; generally destroys planarity.
pub fn jitter(m: &Mesh, amplitude: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    m.with_vertices(
        m.vertices()
            .iter()
            .map(|p| p + Vec3::from_fn(|_, _| amplitude * rng.gen_range(-1.0..1.0)))
            .collect(),
    )
    .expect("same vertex count")
}

/// Named reference meshes with the family they belong to for degree-of-freedom
/// tables.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub mesh: Mesh,
    pub family: Option<crate::subspace::Family>,
}

/// Small meshes (at most a couple hundred vertices) exercised by the audits.
pub fn standard_corpus() -> Vec<CorpusEntry> {
    use crate::subspace::Family::{Hex, Quad};
    let entry = |name: &str, mesh: Mesh, family| CorpusEntry {
        name: name.to_string(),
        mesh,
        family,
    };
    vec![
        entry("cube", cube(), Some(Quad)),
        entry("open_box", cube_minus_face(), Some(Quad)),
        entry("grid_4x4", quad_grid(4, 4), Some(Quad)),
        entry("wavy_grid_5x4", wavy_grid(5, 4), Some(Quad)),
        entry("quad_strip_6", quad_strip(6), Some(Quad)),
        entry("quad_torus_8x6", quad_torus(8, 6, 3.0, 1.0), Some(Quad)),
        entry("rhombic_dodecahedron", rhombic_dodecahedron(), Some(Quad)),
        entry("hex_patch_1", hex_patch(1), Some(Hex)),
        entry("hex_strip_4", hex_strip(4), Some(Hex)),
        entry("hexagonal_prism", hexagonal_prism(), None),
        entry("truncated_octahedron", truncated_octahedron(), None),
        entry("dodecahedron", dodecahedron(), None),
        entry("goldberg_2", goldberg(2), None),
        entry("hex_half_sphere_2", hex_half_sphere(2), None),
    ]
}
