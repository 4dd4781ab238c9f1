//! Linear constraint rows for a single face.
//!
//! Local column layout for a k-gon is axis-major: column `a * k + i` is
//! coordinate `a` of the i-th face vertex. Rows are orthonormal.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX};

use super::cases::FaceCase;
use crate::error::{PmError, Result};
use crate::mesh::Vec3;

/// Relative cutoff for rank decisions on local blocks.
const RANK_TOL: f64 = 1e-10;
/// Prescribed normals within this of the source normal fall back to `Parallel`.
const ALIGNED_TOL: f64 = 1e-8;

/// Intermediate quantities of the prescribed-normal construction.
#[derive(Debug, Clone)]
pub struct ConstraintDerivation {
    /// Unit intersection direction `P x N_Y`.
    pub n: Vec3,
    /// In-plane unit vector `N x N_Y`.
    pub e_y: Vec3,
    pub y1: DVector<f64>,
    pub y2: DVector<f64>,
    /// Orthonormal basis of the null space of `y2` (k x (k-1)).
    pub m: DMatrix<f64>,
}

/// Constraint rows of one face.
#[derive(Debug, Clone)]
pub struct FaceBlock {
    /// Case actually used (after fallback).
    pub case: FaceCase,
    pub fell_back: bool,
    /// r x 3k, orthonormal rows.
    pub rows: DMatrix<f64>,
    /// For `Affine` faces: the per-axis rows (r/3 x k); the same for all axes.
    pub axis_rows: Option<DMatrix<f64>>,
    /// Largest singular value of the raw rows before orthonormalization.
    pub scaling: f64,
    pub derivation: Option<ConstraintDerivation>,
}

pub(crate) fn centering(k: usize) -> DMatrix<f64> {
    DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64)
}

fn centered_points(points: &[Vec3]) -> Matrix3xX<f64> {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    Matrix3xX::from_columns(&points.iter().map(|p| p - c).collect::<Vec<_>>())
}

/// Orthonormal basis of the row space (rows of the result), plus the largest
/// singular value.
pub(crate) fn row_basis(raw: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, f64) {
    let cols = raw.ncols();
    if raw.nrows() == 0 || cols == 0 {
        return (DMatrix::zeros(0, cols), 0.0);
    }
    let (sv, v) = crate::linalg::right_svd(raw);
    let smax = sv[0];
    if smax <= 0.0 {
        return (DMatrix::zeros(0, cols), 0.0);
    }
    let r = sv.iter().take_while(|&&s| s > rel_tol * smax).count();
    (v.columns(0, r).transpose(), smax)
}

/// Builds the rows of the face constraint for `case`, given the source face
/// vertices in face order. Triangles give an empty block.
pub fn build_face_constraints(
    face_id: usize,
    points: &[Vec3],
    case: &FaceCase,
) -> Result<FaceBlock> {
    let k = points.len();
    if k == 3 {
        return Ok(FaceBlock {
            case: *case,
            fell_back: false,
            rows: DMatrix::zeros(0, 9),
            axis_rows: match case {
                FaceCase::Affine => Some(DMatrix::zeros(0, 3)),
                _ => None,
            },
            scaling: 0.0,
            derivation: None,
        });
    }
    let y = centered_points(points);
    let (axes, s) = crate::linalg::principal_axes(points);
    if s[1] <= 1e-12 * s[0] || s[0] == 0.0 {
        return Err(PmError::DegenerateFace { face: face_id });
    }
    let mut n_y: Vec3 = axes.column(2).into_owned();
    let newell = crate::mesh::newell_normal(points);
    if newell.dot(&n_y) < 0.0 {
        n_y = -n_y;
    }

    match *case {
        FaceCase::Affine => {
            let v1 = y.transpose() * axes.column(0) / s[0];
            let v2 = y.transpose() * axes.column(1) / s[1];
            let kmat = centering(k) - &v1 * v1.transpose() - &v2 * v2.transpose();
            let (axis, scaling) = row_basis(&kmat, RANK_TOL);
            let r = axis.nrows();
            let mut rows = DMatrix::zeros(3 * r, 3 * k);
            for a in 0..3 {
                rows.view_mut((a * r, a * k), (r, k)).copy_from(&axis);
            }
            Ok(FaceBlock {
                case: *case,
                fell_back: false,
                rows,
                axis_rows: Some(axis),
                scaling,
                derivation: None,
            })
        }
        FaceCase::Parallel => Ok(parallel_block(k, &n_y, false)),
        FaceCase::PrescribedNormal(p) => {
            let p = p.normalize();
            if p.dot(&n_y).abs() > 1.0 - ALIGNED_TOL {
                log::debug!(
                    "face {face_id}: prescribed normal matches face normal, using parallel"
                );
                return Ok(parallel_block(k, &n_y, true));
            }
            let n = p.cross(&n_y).normalize();
            let e_y = n.cross(&n_y);
            let y1 = DVector::from_iterator(k, (0..k).map(|i| n.dot(&y.column(i))));
            let y2 = DVector::from_iterator(k, (0..k).map(|i| e_y.dot(&y.column(i))));
            let m = null_of_row(&y2);
            let cm = centering(k) * &m;
            let cross = cross_matrix(&n);
            let mut raw = DMatrix::zeros(3 * (k - 1), 3 * k);
            for a in 0..3 {
                for j in 0..k - 1 {
                    let row = a * (k - 1) + j;
                    for b in 0..3 {
                        let c = cross[(a, b)];
                        if c == 0.0 {
                            continue;
                        }
                        for i in 0..k {
                            raw[(row, b * k + i)] = c * cm[(i, j)];
                        }
                    }
                }
            }
            let (rows, scaling) = row_basis(&raw, RANK_TOL);
            Ok(FaceBlock {
                case: *case,
                fell_back: false,
                rows,
                axis_rows: None,
                scaling,
                derivation: Some(ConstraintDerivation { n, e_y, y1, y2, m }),
            })
        }
    }
}

fn parallel_block(k: usize, n_y: &Vec3, fell_back: bool) -> FaceBlock {
    let mut raw = DMatrix::zeros(k, 3 * k);
    for i in 0..k {
        let j = (i + 1) % k;
        for a in 0..3 {
            raw[(i, a * k + i)] += n_y[a];
            raw[(i, a * k + j)] -= n_y[a];
        }
    }
    let (rows, scaling) = row_basis(&raw, RANK_TOL);
    FaceBlock {
        case: FaceCase::Parallel,
        fell_back,
        rows,
        axis_rows: None,
        scaling,
        derivation: None,
    }
}

pub(crate) fn cross_matrix(n: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0)
}

/// Orthonormal basis (as columns) of the vectors orthogonal to `v`.
fn null_of_row(v: &DVector<f64>) -> DMatrix<f64> {
    let k = v.len();
    crate::linalg::null_space(&DMatrix::from_row_slice(1, k, v.as_slice()), 0.5 * v.norm())
}
