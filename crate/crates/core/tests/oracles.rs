//! Library results against dense brute-force oracles.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3};
use pmspace::corpus;
use pmspace::deform::{deform, global_step, local_step, DeformParams, Energy, Handle};
use pmspace::dual::{dual_edit, polar_dual, primal_from_dual, DualEdit, RECONSTRUCTION_TOL};
use pmspace::mesh::{counts, face_plane};
use pmspace::shapes::{eigenshapes, fundamental_shape, graph_laplacian, sparse_pursuit, support_of};
use pmspace::subspace::{closest_pm, subspace, CaseAssignment, CaseKind, DEFAULT_TOL};
use pmspace::{Mesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_corpus() -> Vec<(String, Mesh)> {
    let mut out: Vec<(String, Mesh)> = corpus::standard_corpus()
        .into_iter()
        .filter(|e| e.mesh.num_vertices() <= 200)
        .map(|e| (e.name, e.mesh))
        .collect();
    out.push(("hex_patch_2".into(), corpus::hex_patch(2)));
    out.push(("single_quad".into(), corpus::quad_grid(1, 1)));
    out
}

fn dense_basis(mesh: &Mesh, kind: CaseKind) -> (DMatrix<f64>, f64) {
    let b = subspace(mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
    dense_null_space(&b.constraints().to_dense(), DEFAULT_TOL)
}

#[test]
fn ndof_matches_dense_nullity() {
    for (name, mesh) in small_corpus() {
        for kind in CaseKind::ALL {
            let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
            let (n, gap) = dense_basis(&mesh, kind);
            assert!(gap > 1e-6, "{name} {kind:?}: no clear rank gap ({gap:e})");
            assert_eq!(basis.ndof(), n.ncols(), "{name} {kind:?}");
            assert!(span_excess(basis.q(), &n) < 1e-8, "{name} {kind:?}");
            let q = basis.q();
            let ortho = (q.tr_mul(q) - DMatrix::identity(q.ncols(), q.ncols())).amax();
            assert!(ortho < 1e-10, "{name} {kind:?}: Q^T Q off by {ortho:e}");
        }
    }
}

#[test]
fn frozen_dimensions() {
    let dim = |m: &Mesh, k: CaseKind| dense_basis(m, k).0.ncols();
    let cube = corpus::cube();
    assert_eq!(dim(&cube, CaseKind::Affine), 12);
    assert_eq!(dim(&cube, CaseKind::Parallel), 6);
    assert_eq!(dim(&cube, CaseKind::Vertical), 10);
    let open = corpus::cube_minus_face();
    assert_eq!(dim(&open, CaseKind::Affine), 12);
    assert_eq!(dim(&open, CaseKind::Parallel), 9);
    // A lone planar quad: the normal column of an affine map acts on nothing.
    assert_eq!(dim(&corpus::quad_grid(1, 1), CaseKind::Affine), 9);
}

#[test]
fn projector_matches_dense() {
    for (name, mesh) in [("cube", corpus::cube()), ("grid", corpus::wavy_grid(4, 3)), ("hex", corpus::hex_patch(1))] {
        for kind in CaseKind::ALL {
            let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
            let (n, _) = dense_basis(&mesh, kind);
            let err = (basis.projector() - &n * n.transpose()).amax();
            assert!(err < 1e-9, "{name} {kind:?}: {err:e}");
        }
    }
}

#[test]
fn closest_pm_matches_constrained_least_squares() {
    let mesh = corpus::wavy_grid(4, 4);
    let target = corpus::jitter(&mesh, 0.05, 3);
    let pins = [0usize, 12, 24];
    for kind in CaseKind::ALL {
        let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
        let hard: Vec<(usize, Vec3)> = pins.iter().map(|&v| (v, mesh.vertex(v))).collect();
        let got = closest_pm(&basis, &target, &hard).unwrap();

        let (n, _) = dense_basis(&mesh, kind);
        let nv = mesh.num_vertices();
        let rows: Vec<usize> = pins.iter().flat_map(|&v| (0..3).map(move |a| a * nv + v)).collect();
        let c = DMatrix::from_fn(rows.len(), n.ncols(), |i, j| n[(rows[i], j)]);
        let e = DVector::from_iterator(rows.len(), pins.iter().flat_map(|&v| mesh.vertex(v).iter().copied().collect::<Vec<_>>()));
        let wp = lstsq(&c, &e);
        let (z, _) = dense_null_space(&c, 1e-10);
        let nz = &n * &z;
        let y = lstsq(&nz, &(target.to_vec() - &n * &wp));
        let want = target.from_vec(&(&n * wp + nz * y)).unwrap();
        assert!(max_vertex_gap(&got, &want) < 1e-8, "{kind:?}");
        for &v in &pins {
            assert!((got.vertex(v) - mesh.vertex(v)).norm() < 1e-9);
        }
    }
}

#[test]
fn spectrum_matches_projected_laplacian() {
    let meshes = [
        ("cube", corpus::cube()),
        ("grid", corpus::wavy_grid(4, 4)),
        ("hex", corpus::hex_patch(1)),
        ("torus", corpus::quad_torus(6, 5, 3.0, 1.0)),
    ];
    for (name, mesh) in meshes {
        for kind in CaseKind::ALL {
            let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
            let spectrum = eigenshapes(&basis, &graph_laplacian(&mesh), None);
            let (n, _) = dense_basis(&mesh, kind);
            let p = &n * n.transpose();
            let plp = &p * dense_laplacian3(&mesh) * &p;
            let (ev, _) = sym_eigen(&((&plp + plp.transpose()) * 0.5));
            let nonzero = |v: &[f64]| v.iter().copied().filter(|x| x.abs() > 1e-7).collect::<Vec<_>>();
            let want = nonzero(&ev);
            let got = nonzero(&spectrum.frequencies);
            assert_eq!(got.len(), want.len(), "{name} {kind:?}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-8, "{name} {kind:?}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn affine_cube_zero_modes_hold_translations() {
    let mesh = corpus::cube();
    let basis = subspace(&mesh, &CaseAssignment::affine()).unwrap();
    let spectrum = eigenshapes(&basis, &graph_laplacian(&mesh), None);
    let zero: Vec<DVector<f64>> = spectrum
        .frequencies
        .iter()
        .zip(&spectrum.shapes)
        .filter(|(f, _)| f.abs() < 1e-9)
        .map(|(_, s)| s.displacement.clone())
        .collect();
    assert_eq!(zero.len(), 3);
    let z = DMatrix::from_columns(&zero);
    for axis in 0..3 {
        let t = translation(8, axis);
        let res = (&t - &z * z.tr_mul(&t)).norm();
        assert!(res <= 1e-10, "axis {axis}: {res:e}");
    }
}

#[test]
fn fundamental_shape_matches_dense_solve() {
    let mesh = corpus::hex_patch(2);
    let l = graph_laplacian(&mesh);
    let l3 = dense_laplacian3(&mesh);
    let nv = mesh.num_vertices();
    for kind in [CaseKind::Vertical, CaseKind::Parallel] {
        let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
        let (n, _) = dense_basis(&mesh, kind);
        let mut delta = DVector::zeros(3 * nv);
        delta[2 * nv + 7] = 1.0;
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 1.0, 10.0] {
            let got = fundamental_shape(&basis, &l, 7, lambda).unwrap();
            let ln = &l3 * &n;
            let system = DMatrix::identity(n.ncols(), n.ncols()) + ln.tr_mul(&ln) * lambda;
            let w = system.lu().solve(&n.tr_mul(&delta)).unwrap();
            let want = &n * w;
            let err = (&got.displacement - &want).amax();
            assert!(err < 1e-9, "{kind:?} lambda {lambda}: {err:e}");
            if lambda == 0.0 {
                assert!((&got.displacement - &n * n.tr_mul(&delta)).amax() <= 1e-10);
            }
            let rough = (&l3 * &got.displacement).norm() / got.displacement.norm();
            assert!(rough <= prev + 1e-12, "{kind:?}: smoothing did not reduce roughness");
            prev = rough;
        }
    }
}

fn random_rotations(count: usize, seed: u64) -> Vec<Matrix3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(-0.3..0.3);
            let b = rng.gen_range(-0.3..0.3);
            let c = rng.gen_range(-0.3..0.3);
            *Rotation3::from_euler_angles(a, b, c).matrix()
        })
        .collect()
}

/// Rows of the quadratic energy: centered face coordinates against rotated
/// centered rest faces, plus weighted soft handles.
fn energy_rows(rest: &Mesh, transforms: &[Matrix3<f64>], soft: &[(usize, Vec3, f64)]) -> (DMatrix<f64>, DVector<f64>) {
    let nv = rest.num_vertices();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for (f, t) in transforms.iter().enumerate() {
        let face = rest.face(f);
        let k = face.len() as f64;
        let pts = rest.face_points(f);
        let c = pts.iter().sum::<Vec3>() / k;
        for (i, p) in pts.iter().enumerate() {
            let tp = t * (p - c);
            for a in 0..3 {
                let coef = face
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (a * nv + v, if i == j { 1.0 - 1.0 / k } else { -1.0 / k }))
                    .collect();
                rows.push((coef, tp[a]));
            }
        }
    }
    for &(v, target, w) in soft {
        for a in 0..3 {
            rows.push((vec![(a * nv + v, w.sqrt())], w.sqrt() * target[a]));
        }
    }
    let mut m = DMatrix::zeros(rows.len(), 3 * nv);
    let mut r = DVector::zeros(rows.len());
    for (i, (coef, rhs)) in rows.into_iter().enumerate() {
        for (c, v) in coef {
            m[(i, c)] += v;
        }
        r[i] = rhs;
    }
    (m, r)
}

/// Global step over `rest + N w` with hard handles eliminated through the
/// null space of their rows.
fn dense_global(
    rest: &Mesh,
    n: &DMatrix<f64>,
    transforms: &[Matrix3<f64>],
    soft: &[(usize, Vec3, f64)],
    hard: &[(usize, Vec3)],
) -> Mesh {
    let nv = rest.num_vertices();
    let (m, r) = energy_rows(rest, transforms, soft);
    let x0 = rest.to_vec();
    let rhs = r - &m * &x0;
    let (wp, z) = if hard.is_empty() {
        (DVector::zeros(n.ncols()), DMatrix::identity(n.ncols(), n.ncols()))
    } else {
        let rows: Vec<usize> = hard.iter().flat_map(|&(v, _)| (0..3).map(move |a| a * nv + v)).collect();
        let c = DMatrix::from_fn(rows.len(), n.ncols(), |i, j| n[(rows[i], j)]);
        let e = DVector::from_iterator(
            rows.len(),
            hard.iter().flat_map(|&(v, p)| (0..3).map(move |a| p[a] - rest.vertex(v)[a])),
        );
        (lstsq(&c, &e), dense_null_space(&c, 1e-10).0)
    };
    let mn = &m * n;
    let y = lstsq(&(&mn * &z), &(rhs - &mn * &wp));
    rest.displaced(&(n * (wp + z * y))).unwrap()
}

#[test]
fn global_step_matches_normal_equations() {
    let mesh = corpus::wavy_grid(3, 3);
    let transforms = random_rotations(mesh.num_faces(), 11);
    let soft = [(0usize, mesh.vertex(0) + Vec3::new(0.0, 0.0, 0.3), 10.0), (15, mesh.vertex(15), 10.0)];
    let handles: Vec<Handle> = soft
        .iter()
        .map(|&(v, t, w)| Handle {
            vertex: v,
            target: t,
            mode: pmspace::deform::HandleMode::Soft(w),
        })
        .collect();
    for kind in CaseKind::ALL {
        let basis = subspace(&mesh, &CaseAssignment::uniform(kind.face_case())).unwrap();
        let (n, _) = dense_basis(&mesh, kind);
        let got = global_step(&basis, &mesh, &transforms, &handles).unwrap();
        let want = dense_global(&mesh, &n, &transforms, &soft, &[]);
        assert!(max_vertex_gap(&got, &want) < 1e-9, "{kind:?}");
    }
}

fn dense_local(rest: &Mesh, current: &Mesh) -> Vec<Matrix3<f64>> {
    (0..rest.num_faces())
        .map(|f| {
            let p = rest.face_points(f);
            let x = current.face_points(f);
            let cp = p.iter().sum::<Vec3>() / p.len() as f64;
            let cx = x.iter().sum::<Vec3>() / x.len() as f64;
            let m = x
                .iter()
                .zip(&p)
                .fold(Matrix3::zeros(), |acc, (xi, pi)| acc + (xi - cx) * (pi - cp).transpose());
            procrustes(&m)
        })
        .collect()
}

#[test]
fn local_step_matches_procrustes() {
    let rest = corpus::wavy_grid(3, 3);
    let moved = corpus::jitter(&rest, 0.1, 5);
    let got = local_step(&rest, &moved, Energy::Arap).unwrap();
    for (g, w) in got.iter().zip(dense_local(&rest, &moved)) {
        assert!((g - w).amax() < 1e-10);
        assert!((g.transpose() * g - Matrix3::identity()).amax() < 1e-12);
    }
}

#[test]
fn deformation_matches_dense_alternation() {
    let rest = corpus::quad_strip(6);
    let last = rest.num_vertices() - 1;
    let params = DeformParams {
        energy: Energy::Arap,
        iterations: 50,
        convergence_tol: 0.0,
    };
    for kind in [CaseKind::Affine, CaseKind::Vertical] {
        let basis = subspace(&rest, &CaseAssignment::uniform(kind.face_case())).unwrap();
        let (n, _) = dense_basis(&rest, kind);
        // Hard targets taken from a member of the subspace, so they are reachable.
        let w = DVector::from_fn(n.ncols(), |i, _| ((i * 7 + 3) % 5) as f64 * 0.1 - 0.2);
        let goal = rest.displaced(&(&n * w)).unwrap();
        let hard = [(0usize, goal.vertex(0)), (last, goal.vertex(last))];
        let handles: Vec<Handle> = hard.iter().map(|&(v, p)| Handle::hard(v, p)).collect();
        let got = deform(&basis, &rest, &handles, &params).unwrap();
        let mut current = rest.clone();
        for _ in 0..got.iterations {
            let t = dense_local(&rest, &current);
            current = dense_global(&rest, &n, &t, &[], &hard);
        }
        let gap = max_vertex_gap(&got.mesh, &current);
        assert!(gap < 1e-6, "{kind:?}: {gap:e}");
        assert!((got.mesh.vertex(last) - goal.vertex(last)).norm() < 1e-8);
    }
}

#[test]
fn affine_hex_drag_is_global_affine() {
    // Curved cubic mesh: twelve affine dofs are exactly the global affine maps.
    let rest = corpus::hex_half_sphere(2);
    let basis = subspace(&rest, &CaseAssignment::affine()).unwrap();
    assert_eq!(basis.ndof(), 12);
    let top = (0..rest.num_vertices())
        .max_by(|&a, &b| rest.vertex(a).z.total_cmp(&rest.vertex(b).z))
        .unwrap();
    let handles: Vec<Handle> = (0..rest.num_vertices())
        .filter(|&v| rest.vertex(v).z < 0.3 * rest.vertex(top).z)
        .map(|v| Handle::soft(v, rest.vertex(v)))
        .chain([Handle::soft(top, rest.vertex(top) + Vec3::new(0.0, 0.0, 0.3))])
        .collect();
    let out = deform(&basis, &rest, &handles, &DeformParams::default()).unwrap();
    let moved = max_vertex_gap(&rest, &out.mesh);
    assert!(moved > 1e-3, "drag had no effect");
    let res = affine_fit(rest.vertices(), out.mesh.vertices());
    assert!(res < 1e-6, "not a global affine image: {res:e}");
}

#[test]
fn flat_hex_patch_has_one_extra_lifting_per_axis() {
    // A flat patch keeps only nine distinct global affine effects; the other
    // three dofs move vertices off any common affine image.
    let rest = corpus::hex_patch(2);
    let basis = subspace(&rest, &CaseAssignment::affine()).unwrap();
    assert_eq!(basis.ndof(), 12);
    let n = rest.num_vertices();
    let mut worst: f64 = 0.0;
    for k in 0..basis.ndof() {
        let col = basis.q().column(k);
        let moved: Vec<Vec3> = (0..n)
            .map(|i| rest.vertex(i) + 0.1 * Vec3::new(col[i], col[n + i], col[2 * n + i]))
            .collect();
        worst = worst.max(affine_fit(rest.vertices(), &moved));
    }
    assert!(worst > 1e-3, "{worst:e}");
}

#[test]
fn cube_and_octahedron_are_polar() {
    let cube = corpus::centered_cube(1.0);
    let d = polar_dual(&cube, Some(Vec3::zeros())).unwrap();
    for (f, u) in d.mesh.vertices().iter().enumerate() {
        let plane = face_plane(&cube, f).unwrap();
        let want = plane.normal / plane.normal.dot(&plane.centroid);
        assert!((u - want).norm() < 1e-10);
    }
    let oct = corpus::octahedron();
    let dd = polar_dual(&oct, Some(Vec3::zeros())).unwrap();
    assert_eq!(dd.mesh.num_vertices(), 8);
    assert!(dd.mesh.faces().iter().all(|f| f.len() == 4));
    let scale = oct.vertex(0).norm();
    for p in dd.mesh.vertices() {
        for a in 0..3 {
            assert!((p[a].abs() - 1.0 / scale).abs() < 1e-10, "{p}");
        }
    }
}

#[test]
fn dual_round_trips() {
    for mesh in [corpus::cube(), corpus::dodecahedron(), corpus::truncated_octahedron(), corpus::goldberg(2)] {
        let d = polar_dual(&mesh, None).unwrap();
        for (f, u) in d.mesh.vertices().iter().enumerate() {
            let n = face_plane(&mesh, f).unwrap().normal;
            assert!((u - d.center).normalize().cross(&n).norm() < 1e-10);
        }
        let back = primal_from_dual(&d, &mesh).unwrap();
        assert!(max_vertex_gap(&back, &mesh) <= 1e-9);
        let dd = polar_dual(&d.mesh, Some(d.center)).unwrap();
        assert!(max_vertex_gap(&dd.mesh, &mesh) <= 1e-9);
    }
}

#[test]
fn three_regular_dual_edits_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for mesh in [corpus::cube(), corpus::dodecahedron(), corpus::truncated_octahedron(), corpus::hexagonal_prism()] {
        let nf = mesh.num_faces();
        for _ in 0..5 {
            let disp = DVector::from_fn(3 * nf, |_, _| rng.gen_range(-0.05..0.05));
            let r = dual_edit(&mesh, &CaseAssignment::affine(), &DualEdit::Displacement(disp)).unwrap();
            let worst = r.residuals.iter().copied().fold(0.0, f64::max);
            assert!(worst <= RECONSTRUCTION_TOL, "{worst:e}");
        }
    }
}

#[test]
fn flat_grid_sparse_shape_is_one_line() {
    let mesh = corpus::quad_grid(6, 6);
    let basis = subspace(&mesh, &CaseAssignment::affine()).unwrap();
    let p = sparse_pursuit(&basis, Some(3), 7, 1e-10).unwrap();
    assert!(p.converged);
    assert!(p.best.residual <= 1e-10);
    let support = support_of(&p.best.displacement);
    let column: Vec<usize> = (0..7).map(|j| 3 + 7 * j).collect();
    assert_eq!(support, column);
}

#[test]
fn counts_identities_on_corpus() {
    for e in corpus::standard_corpus() {
        let c = counts(&e.mesh);
        assert_eq!(c.n_v, e.mesh.num_vertices());
        assert_eq!(c.n_f, e.mesh.num_faces());
        let corners: usize = e.mesh.faces().iter().map(Vec::len).sum();
        assert_eq!(c.n_c, corners, "{}", e.name);
    }
}
