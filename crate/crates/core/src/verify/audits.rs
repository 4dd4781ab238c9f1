//! Mesh-level audits: maximality probes, the mixed-derivative stencil,
//! 3-regular dimension checks and the free-vertex table.

use nalgebra::{DVector, Matrix3};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusEntry};
use crate::error::{PmError, Result};
use crate::mesh::{counts, planarity_report, Mesh, Vec3};
use crate::subspace::{
    assemble, containment_check, min_ndof_bound, subspace, table1_min_nfv, CaseAssignment,
    CaseKind, Containment, SubspaceBasis,
};

/// Planarity threshold (relative) separating planar from non-planar meshes.
pub const PLANAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentFlag {
    pub a: CaseKind,
    pub b: CaseKind,
    pub relation: Containment,
    pub dim_intersection: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalityReport {
    pub ndof: usize,
    pub trials: usize,
    /// Outside PMs drawn that turned out to lie in the subspace.
    pub rejected_in_span: usize,
    /// Probes where some combination with a subspace element is non-planar.
    pub certified: usize,
    /// Largest non-planarity found per probe.
    pub probe_nonplanarity: Vec<f64>,
    /// Containments among the three non-mixed cases (pairs with `a` before `b`).
    pub containments: Vec<ContainmentFlag>,
    /// Always "certified in sampled directions"; never a proof.
    pub verdict: String,
}

/// A random projective image of `mesh`: planar faces stay planar.
fn projective_image(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Mesh {
    let scale = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
    let c = mesh.vertices().iter().sum::<Vec3>() / mesh.num_vertices() as f64;
    let m = Matrix3::identity() + Matrix3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
    let h = Vec3::new(
        rng.gen_range(-0.3..0.3),
        rng.gen_range(-0.3..0.3),
        rng.gen_range(-0.3..0.3),
    ) / scale;
    let vertices = mesh
        .vertices()
        .iter()
        .map(|p| {
            let q = p - c;
            c + m * q / (1.0 + h.dot(&q))
        })
        .collect();
    mesh.with_vertices(vertices).expect("same topology")
}

/// Pairwise containment among the three non-mixed subspaces of `mesh`.
pub fn case_containments(mesh: &Mesh) -> Result<Vec<ContainmentFlag>> {
    let bases: Vec<(CaseKind, SubspaceBasis)> = CaseKind::ALL
        .iter()
        .map(|&k| Ok((k, subspace(mesh, &CaseAssignment::uniform(k.face_case()))?)))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..bases.len() {
        for j in i + 1..bases.len() {
            let r = containment_check(&bases[i].1, &bases[j].1)?;
            out.push(ContainmentFlag {
                a: bases[i].0,
                b: bases[j].0,
                relation: r.relation,
                dim_intersection: r.dim_intersection,
            });
        }
    }
    Ok(out)
}

/// Draws planar meshes outside the subspace and checks that adding them to
/// the subspace breaks planarity somewhere.
pub fn maximality_probe(
    mesh: &Mesh,
    assignment: &CaseAssignment,
    trials: usize,
    seed: u64,
) -> Result<MaximalityReport> {
    let basis = subspace(mesh, assignment)?;
    let cm = basis.constraints();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rejected, mut certified) = (0, 0);
    let mut probe_nonplanarity = Vec::with_capacity(trials);
    let mut drawn = 0;
    while probe_nonplanarity.len() < trials {
        drawn += 1;
        if drawn > 20 * trials.max(1) {
            return Err(PmError::InvalidArgument(
                "could not draw planar meshes outside the subspace".into(),
            ));
        }
        let z = projective_image(mesh, &mut rng);
        let zv = z.to_vec();
        if cm.apply(&zv).norm() <= 1e-9 * zv.norm() {
            rejected += 1;
            continue;
        }
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let w = DVector::from_fn(basis.ndof(), |_, _| rng.gen_range(-1.0..1.0));
            let v = basis.q() * w;
            let t = zv.norm() / v.norm().max(f64::MIN_POSITIVE) * rng.gen_range(0.2..1.0);
            let combo = z.from_vec(&(&zv + v * t))?;
            worst = worst.max(planarity_report(&combo)?.max);
        }
        if worst > PLANAR_TOL {
            certified += 1;
        }
        probe_nonplanarity.push(worst);
    }
    let containments = match assignment.uniform_kind(mesh) {
        Some(_) => case_containments(mesh)?,
        None => Vec::new(),
    };
    Ok(MaximalityReport {
        ndof: basis.ndof(),
        trials,
        rejected_in_span: rejected,
        certified,
        probe_nonplanarity,
        containments,
        verdict: format!("certified in {certified} of {trials} sampled directions (not a proof)"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilReport {
    pub grid: (usize, usize),
    /// Interior 3x3 stencil of the per-axis block of `B^T B`, divided by `scale`.
    pub stencil: [[f64; 3]; 3],
    pub scale: f64,
    /// Max deviation of the scaled stencil from the mixed-derivative stencil.
    pub stencil_error: f64,
    pub lift_trials: usize,
    /// Largest `|B z|` over random lifts `z = f(x) + g(y)`.
    pub lift_max_residual: f64,
    /// `|B z|` for `z = sin(x) + cos(y)`.
    pub sincos_residual: f64,
    /// `|B z|` for `z = x y`.
    pub xy_residual: f64,
    pub passed: bool,
}

pub const MIXED_DERIVATIVE_STENCIL: [[f64; 3]; 3] =
    [[0.25, -0.5, 0.25], [-0.5, 1.0, -0.5], [0.25, -0.5, 0.25]];

/// Affine case on a flat `nx x ny` quad grid: stencil, lifts and `x y`.
pub fn stencil_check(nx: usize, ny: usize, lift_trials: usize, seed: u64) -> Result<StencilReport> {
    if nx < 2 || ny < 2 {
        return Err(PmError::InvalidArgument(
            "stencil needs at least a 2x2 grid".into(),
        ));
    }
    let mesh = corpus::quad_grid(nx, ny);
    let cm = assemble(&mesh, &CaseAssignment::affine())?;
    let block = cm.axis_block().expect("affine grid is decoupled");
    let dense = nalgebra_sparse::convert::serial::convert_csr_dense(block);
    let btb = dense.tr_mul(&dense);
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let (ci, cj) = (nx / 2, ny / 2);
    let center = idx(ci, cj);
    let mut stencil = [[0.0; 3]; 3];
    for (r, row) in stencil.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = btb[(center, idx(ci + c - 1, cj + r - 1))];
        }
    }
    let scale = stencil[1][1];
    let mut stencil_error: f64 = 0.0;
    let mut off_stencil: f64 = 0.0;
    for v in 0..mesh.num_vertices() {
        let (i, j) = (v % (nx + 1), v / (nx + 1));
        if i.abs_diff(ci) > 1 || j.abs_diff(cj) > 1 {
            off_stencil = off_stencil.max(btb[(center, v)].abs());
        }
    }
    for r in 0..3 {
        for c in 0..3 {
            stencil[r][c] /= scale;
            stencil_error =
                stencil_error.max((stencil[r][c] - MIXED_DERIVATIVE_STENCIL[r][c]).abs());
        }
    }
    stencil_error = stencil_error.max(off_stencil / scale.abs());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.num_vertices();
    let mut lift_max: f64 = 0.0;
    for _ in 0..lift_trials {
        let f: Vec<f64> = (0..=nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..=ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = DVector::from_fn(n, |v, _| f[v % (nx + 1)] + g[v / (nx + 1)]);
        lift_max = lift_max.max((&dense * z).norm());
    }
    let sincos = DVector::from_fn(n, |v, _| {
        ((v % (nx + 1)) as f64).sin() + ((v / (nx + 1)) as f64).cos()
    });
    let sincos_residual = (&dense * sincos).norm();
    let xy = DVector::from_fn(n, |v, _| ((v % (nx + 1)) * (v / (nx + 1))) as f64);
    let xy_residual = (&dense * xy).norm();
    Ok(StencilReport {
        grid: (nx, ny),
        stencil,
        scale,
        stencil_error,
        lift_trials,
        lift_max_residual: lift_max,
        sincos_residual,
        xy_residual,
        passed: scale > 0.0
            && stencil_error <= 1e-10
            && lift_max <= 1e-10
            && sincos_residual <= 1e-10
            && xy_residual > 1e-3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regular3Report {
    pub closed: bool,
    pub three_regular: bool,
    /// Set when the mesh is not closed and 3-regular; the bounds are then not asserted.
    pub skipped: Option<String>,
    pub affine_ndof: usize,
    pub parallel_ndof: usize,
    pub n_f: usize,
    pub affine_at_most_12: bool,
    pub affine_equals_12: bool,
    pub parallel_equals_faces: bool,
    pub passed: bool,
}

/// Dimension checks for closed meshes whose vertices all have degree 3.
pub fn regular3_checks(mesh: &Mesh) -> Result<Regular3Report> {
    let closed = mesh.is_closed();
    let topo = mesh.topology();
    let three_regular = (0..mesh.num_vertices()).all(|v| topo.degree(v) == 3);
    let affine_ndof = subspace(mesh, &CaseAssignment::affine())?.ndof();
    let parallel_ndof = subspace(mesh, &CaseAssignment::parallel())?.ndof();
    let n_f = mesh.num_faces();
    let skipped = if !closed {
        Some("mesh has a boundary; bounds not asserted".to_string())
    } else if !three_regular {
        Some("mesh is not 3-regular; bounds not asserted".to_string())
    } else {
        None
    };
    let (le12, eq12, par) = (affine_ndof <= 12, affine_ndof == 12, parallel_ndof == n_f);
    Ok(Regular3Report {
        closed,
        three_regular,
        passed: skipped.is_some() || (le12 && par),
        skipped,
        affine_ndof,
        parallel_ndof,
        n_f,
        affine_at_most_12: le12,
        affine_equals_12: eq12,
        parallel_equals_faces: par,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub mesh: String,
    pub family: Option<crate::subspace::Family>,
    pub case: CaseKind,
    pub n_v: usize,
    pub n_b: usize,
    pub b: usize,
    pub g: i64,
    pub ndof: usize,
    pub min_ndof_bound: i64,
    /// Closed-form minimal free-vertex count, as a reduced fraction.
    pub table_min_nfv: Option<String>,
    pub nfv: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub violations: usize,
}

impl Table1Report {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<24} {:<8} {:>4} {:>4} {:>2} {:>3} {:>6} {:>6} {:>8} {:>7}  ok\n",
            "mesh", "case", "Nv", "Nb", "b", "g", "ndof", "bound", "table", "NFV"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<24} {:<8} {:>4} {:>4} {:>2} {:>3} {:>6} {:>6} {:>8} {:>7.2}  {}\n",
                r.mesh,
                r.case.name(),
                r.n_v,
                r.n_b,
                r.b,
                r.g,
                r.ndof,
                r.min_ndof_bound,
                r.table_min_nfv.as_deref().unwrap_or("-"),
                r.nfv,
                if r.ok { "yes" } else { "NO" }
            ));
        }
        out
    }
}

/// Measured dimensions against both lower bounds for every non-mixed case.
pub fn table1_audit(entries: &[CorpusEntry]) -> Result<Table1Report> {
    let mut rows = Vec::new();
    for e in entries {
        let c = counts(&e.mesh);
        for kind in CaseKind::ALL {
            let ndof = subspace(&e.mesh, &CaseAssignment::uniform(kind.face_case()))?.ndof();
            let bound = min_ndof_bound(&c, kind);
            let table = e.family.map(|f| {
                table1_min_nfv(f, kind, c.n_v as i64, c.n_b as i64, c.b as i64, c.g_paper)
            });
            let ok = ndof as i64 >= bound
                && table.map_or(true, |t| Rational64::from(ndof as i64) >= t * 3);
            rows.push(Table1Row {
                mesh: e.name.clone(),
                family: e.family,
                case: kind,
                n_v: c.n_v,
                n_b: c.n_b,
                b: c.b,
                g: c.g_paper,
                ndof,
                min_ndof_bound: bound,
                table_min_nfv: table.map(|t| t.to_string()),
                nfv: ndof as f64 / 3.0,
                ok,
            });
        }
    }
    let violations = rows.iter().filter(|r| !r.ok).count();
    Ok(Table1Report { rows, violations })
}
