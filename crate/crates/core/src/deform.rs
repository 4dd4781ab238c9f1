//! As-rigid / as-similar-as-possible deformation inside a subspace.
//!
//! Local step: per-face Procrustes fit of the centered rest face to the
//! centered current face. Global step: least squares over `rest + Q w`
//! with the fitted transforms held fixed.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};
use crate::mesh::{Mesh, Vec3};
use crate::subspace::SubspaceBasis;

pub const DEFAULT_SOFT_WEIGHT: f64 = 1e4;
const ASAP_SCALE_RANGE: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Energy {
    #[default]
    Arap,
    Asap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandleMode {
    Hard,
    Soft(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Handle {
    pub vertex: usize,
    pub target: Vec3,
    pub mode: HandleMode,
}

impl Handle {
    pub fn hard(vertex: usize, target: Vec3) -> Self {
        Handle {
            vertex,
            target,
            mode: HandleMode::Hard,
        }
    }

    pub fn soft(vertex: usize, target: Vec3) -> Self {
        Handle {
            vertex,
            target,
            mode: HandleMode::Soft(DEFAULT_SOFT_WEIGHT),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HandleJson {
    vertex: usize,
    target: [f64; 3],
    #[serde(default)]
    mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

/// Parses `[{"vertex":5,"target":[x,y,z],"mode":"hard"|"soft","weight":w}]`;
/// mode defaults to soft.
pub fn parse_handles(text: &str) -> Result<Vec<Handle>> {
    let raw: Vec<HandleJson> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|h| {
            let mode = match h.mode.as_deref().unwrap_or("soft") {
                "hard" => HandleMode::Hard,
                "soft" => {
                    let w = h.weight.unwrap_or(DEFAULT_SOFT_WEIGHT);
                    if !(w > 0.0) {
                        return Err(PmError::InvalidArgument(
                            "soft weight must be positive".into(),
                        ));
                    }
                    HandleMode::Soft(w)
                }
                m => {
                    return Err(PmError::InvalidArgument(format!(
                        "unknown handle mode '{m}'"
                    )))
                }
            };
            Ok(Handle {
                vertex: h.vertex,
                target: Vec3::from(h.target),
                mode,
            })
        })
        .collect()
}

pub fn handles_to_json(handles: &[Handle]) -> String {
    let raw: Vec<HandleJson> = handles
        .iter()
        .map(|h| HandleJson {
            vertex: h.vertex,
            target: [h.target.x, h.target.y, h.target.z],
            mode: Some(match h.mode {
                HandleMode::Hard => "hard".into(),
                HandleMode::Soft(_) => "soft".into(),
            }),
            weight: match h.mode {
                HandleMode::Soft(w) => Some(w),
                HandleMode::Hard => None,
            },
        })
        .collect();
    serde_json::to_string(&raw).expect("serializable")
}

pub fn load_handles(path: impl AsRef<Path>) -> Result<Vec<Handle>> {
    let path = path.as_ref();
    parse_handles(&std::fs::read_to_string(path).map_err(|e| PmError::io(path, e))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformParams {
    pub energy: Energy,
    pub iterations: usize,
    pub convergence_tol: f64,
}

impl Default for DeformParams {
    fn default() -> Self {
        DeformParams {
            energy: Energy::Arap,
            iterations: 50,
            convergence_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeformResult {
    pub mesh: Mesh,
    /// Energy after each global step.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
}

impl DeformResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,energy\n");
        for (i, e) in self.energy_trace.iter().enumerate() {
            out.push_str(&format!("{},{:.12e}\n", i + 1, e));
        }
        out
    }
}

fn centered(points: &[Vec3]) -> Vec<Vec3> {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    points.iter().map(|p| p - c).collect()
}

/// Best rotation (or similarity) `T` with `current ~ T rest` on one face.
fn fit_face(rest: &[Vec3], current: &[Vec3], energy: Energy) -> Option<Matrix3<f64>> {
    let p = centered(rest);
    let x = centered(current);
    // Rest faces are planar: work in their in-plane frame, where the
    // cross-covariance is a tall 3 x 2 matrix.
    let (axes, s) = crate::linalg::principal_axes(rest);
    if !(s[1] > 1e-12 * s[0]) {
        return None;
    }
    let (e1, e2) = (axes.column(0).into_owned(), axes.column(1).into_owned());
    let mut m = DMatrix::zeros(3, 2);
    for (xi, pi) in x.iter().zip(&p) {
        let (c1, c2) = (pi.dot(&e1), pi.dot(&e2));
        for a in 0..3 {
            m[(a, 0)] += xi[a] * c1;
            m[(a, 1)] += xi[a] * c2;
        }
    }
    let (sv, w) = crate::linalg::right_svd(&m);
    if !(sv[1] > 1e-12 * sv[0]) {
        return None;
    }
    let lift = |i: usize| e1 * w[(0, i)] + e2 * w[(1, i)];
    let left = |i: usize| {
        let u = &m * w.column(i) / sv[i];
        Vec3::new(u[0], u[1], u[2])
    };
    let (a1, a2, u1, u2) = (lift(0), lift(1), left(0), left(1));
    let r = u1 * a1.transpose() + u2 * a2.transpose() + u1.cross(&u2) * a1.cross(&a2).transpose();
    match energy {
        Energy::Arap => Some(r),
        Energy::Asap => {
            let pp: f64 = p.iter().map(|v| v.norm_squared()).sum();
            let s = ((sv[0] + sv[1]) / pp).clamp(ASAP_SCALE_RANGE.0, ASAP_SCALE_RANGE.1);
            Some(r * s)
        }
    }
}

/// Per-face transforms fitting `rest` to `current`.
pub fn local_step(rest: &Mesh, current: &Mesh, energy: Energy) -> Result<Vec<Matrix3<f64>>> {
    if !rest.same_topology(current) {
        return Err(PmError::InvalidArgument(
            "rest and current differ in topology".into(),
        ));
    }
    Ok((0..rest.num_faces())
        .map(|f| {
            fit_face(&rest.face_points(f), &current.face_points(f), energy).unwrap_or_else(|| {
                log::warn!("face {f} is degenerate in the local step, using identity");
                Matrix3::identity()
            })
        })
        .collect())
}

/// Energy `sum_f ||centered(X_f) - T_f centered(rest_f)||^2` plus soft handle terms.
pub fn energy(rest: &Mesh, current: &Mesh, transforms: &[Matrix3<f64>], handles: &[Handle]) -> f64 {
    let mut e = 0.0;
    for (f, t) in transforms.iter().enumerate() {
        let p = centered(&rest.face_points(f));
        let x = centered(&current.face_points(f));
        e += x
            .iter()
            .zip(&p)
            .map(|(xi, pi)| (xi - t * pi).norm_squared())
            .sum::<f64>();
    }
    for h in handles {
        if let HandleMode::Soft(w) = h.mode {
            e += w * (current.vertex(h.vertex) - h.target).norm_squared();
        }
    }
    e
}

/// Precomputed global-step solver for fixed basis, rest mesh and handles.
pub struct GlobalSolver<'a> {
    basis: &'a SubspaceBasis,
    rest: Mesh,
    handles: Vec<Handle>,
    /// `A r` for the rest vector.
    a_rest: DVector<f64>,
    /// `Q^T A Q`.
    h: DMatrix<f64>,
    w_particular: DVector<f64>,
    /// Nullspace of the hard-handle rows (d x m).
    z: DMatrix<f64>,
    /// Pseudo-inverse of `Z^T H Z`.
    reduced_pinv: DMatrix<f64>,
}

impl<'a> GlobalSolver<'a> {
    pub fn new(basis: &'a SubspaceBasis, rest: &Mesh, handles: &[Handle]) -> Result<Self> {
        let n = rest.num_vertices();
        if basis.num_vertices() != n {
            return Err(PmError::InvalidArgument(
                "basis and rest mesh differ in size".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for h in handles {
            if h.vertex >= n {
                return Err(PmError::InvalidArgument(format!(
                    "handle vertex {} out of range",
                    h.vertex
                )));
            }
            if !seen.insert(h.vertex) {
                return Err(PmError::InvalidArgument(format!(
                    "duplicate handle on vertex {}",
                    h.vertex
                )));
            }
            if let HandleMode::Soft(w) = h.mode {
                if !(w > 0.0) {
                    return Err(PmError::InvalidArgument(
                        "soft weight must be positive".into(),
                    ));
                }
            }
        }
        let q = basis.q();
        let d = q.ncols();
        let aq = apply_system(rest, handles, q);
        let mut h = q.tr_mul(&aq);
        h = (&h + h.transpose()) * 0.5;
        let r = rest.to_vec();
        let a_rest = apply_system(
            rest,
            handles,
            &DMatrix::from_column_slice(3 * n, 1, r.as_slice()),
        )
        .column(0)
        .into_owned();

        let hard: Vec<&Handle> = handles
            .iter()
            .filter(|h| h.mode == HandleMode::Hard)
            .collect();
        let (w_particular, z) = if hard.is_empty() {
            (DVector::zeros(d), DMatrix::identity(d, d))
        } else {
            let rows: Vec<usize> = hard
                .iter()
                .flat_map(|h| (0..3).map(move |a| a * n + h.vertex))
                .collect();
            let c = DMatrix::from_fn(rows.len(), d, |i, j| q[(rows[i], j)]);
            let e = DVector::from_iterator(
                rows.len(),
                hard.iter()
                    .flat_map(|h| (0..3).map(move |a| h.target[a] - rest.vertex(h.vertex)[a])),
            );
            let (wp, _) = crate::linalg::min_norm_solve(&c, &e, 1e-10);
            let cut = 1e-10 * crate::linalg::right_svd(&c).0.max();
            let residual = (&c * &wp - &e).norm();
            if residual > 1e-8 * e.norm().max(1.0) {
                return Err(PmError::Infeasible { residual });
            }
            (wp, crate::linalg::null_space(&c, cut))
        };
        let reduced = z.tr_mul(&(&h * &z));
        let reduced_pinv = crate::linalg::sym_pinv(&reduced, 1e-12);
        Ok(GlobalSolver {
            basis,
            rest: rest.clone(),
            handles: handles.to_vec(),
            a_rest,
            h,
            w_particular,
            z,
            reduced_pinv,
        })
    }

    /// Minimizer of the energy for fixed transforms.
    pub fn solve(&self, transforms: &[Matrix3<f64>]) -> Result<Mesh> {
        let n = self.rest.num_vertices();
        let mut b = DVector::zeros(3 * n);
        for (f, t) in transforms.iter().enumerate() {
            let face = self.rest.face(f);
            let p = centered(&self.rest.face_points(f));
            let k = face.len() as f64;
            // S_f^T t_f: the centering is symmetric and t_f is already centered.
            let targets: Vec<Vec3> = p.iter().map(|pi| t * pi).collect();
            let mean = targets.iter().sum::<Vec3>() / k;
            for (&v, tv) in face.iter().zip(&targets) {
                for a in 0..3 {
                    b[a * n + v] += tv[a] - mean[a];
                }
            }
        }
        for h in &self.handles {
            if let HandleMode::Soft(w) = h.mode {
                for a in 0..3 {
                    b[a * n + h.vertex] += w * h.target[a];
                }
            }
        }
        let q = self.basis.q();
        let g = q.tr_mul(&(b - &self.a_rest));
        let y = &self.reduced_pinv * self.z.tr_mul(&(g - &self.h * &self.w_particular));
        let w = &self.w_particular + &self.z * y;
        self.rest.displaced(&(q * w))
    }
}

/// `A m` where `A = sum_f S_f^T S_f + soft handle diagonal`, per column.
fn apply_system(rest: &Mesh, handles: &[Handle], m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rest.num_vertices();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for face in rest.faces() {
            let k = face.len() as f64;
            for a in 0..3 {
                let mean = face.iter().map(|&v| m[(a * n + v, j)]).sum::<f64>() / k;
                for &v in face {
                    out[(a * n + v, j)] += m[(a * n + v, j)] - mean;
                }
            }
        }
        for h in handles {
            if let HandleMode::Soft(w) = h.mode {
                for a in 0..3 {
                    out[(a * n + h.vertex, j)] += w * m[(a * n + h.vertex, j)];
                }
            }
        }
    }
    out
}

/// One global solve for given transforms.
pub fn global_step(
    basis: &SubspaceBasis,
    rest: &Mesh,
    transforms: &[Matrix3<f64>],
    handles: &[Handle],
) -> Result<Mesh> {
    GlobalSolver::new(basis, rest, handles)?.solve(transforms)
}

/// Alternates local and global steps starting from `rest`.
pub fn deform(
    basis: &SubspaceBasis,
    rest: &Mesh,
    handles: &[Handle],
    params: &DeformParams,
) -> Result<DeformResult> {
    deform_from(basis, rest, rest, handles, params)
}

/// Alternates local and global steps starting from `initial`.
pub fn deform_from(
    basis: &SubspaceBasis,
    rest: &Mesh,
    initial: &Mesh,
    handles: &[Handle],
    params: &DeformParams,
) -> Result<DeformResult> {
    if params.iterations == 0 {
        return Err(PmError::InvalidArgument(
            "iterations must be positive".into(),
        ));
    }
    let solver = GlobalSolver::new(basis, rest, handles)?;
    let mut current = initial.clone();
    let mut trace = Vec::with_capacity(params.iterations);
    let mut done = 0;
    for _ in 0..params.iterations {
        let transforms = local_step(rest, &current, params.energy)?;
        let next = solver.solve(&transforms)?;
        trace.push(energy(rest, &next, &transforms, handles));
        let x0 = current.to_vec();
        let motion = (next.to_vec() - &x0).norm() / x0.norm().max(f64::MIN_POSITIVE);
        current = next;
        done += 1;
        if motion <= params.convergence_tol {
            break;
        }
    }
    Ok(DeformResult {
        mesh: current,
        energy_trace: trace,
        iterations: done,
    })
}
