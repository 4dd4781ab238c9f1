//! Dense decompositions.
//!
//! nalgebra's SVD and symmetric eigensolver lose several digits on the small
//! rank-deficient blocks this crate produces, so every dense SVD and
//! eigendecomposition goes through faer. Inputs and outputs stay nalgebra.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, Matrix3};

use crate::mesh::Vec3;

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("svd converges")
}

/// Full right SVD: singular values in descending order (length `ncols`,
/// zero-padded for wide input) and the matching right vectors as the columns
/// of an `ncols x ncols` matrix.
pub(crate) fn right_svd(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    if m == 0 {
        return (DVector::zeros(n), DMatrix::identity(n, n));
    }
    let fa = to_faer(a);
    let svd = if m >= n { fa.thin_svd() } else { fa.svd() }.expect("svd converges");
    let s = svd.S().column_vector();
    let v = svd.V();
    let sv = DVector::from_fn(n, |i, _| if i < s.nrows() { s[i] } else { 0.0 });
    (sv, DMatrix::from_fn(n, n, |i, j| v[(i, j)]))
}

/// Eigenvalues in ascending order and orthonormal eigenvectors (columns) of a
/// symmetric matrix; only the lower triangle is read.
pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let evd = to_faer(a)
        .self_adjoint_eigen(Side::Lower)
        .expect("evd converges");
    let s = evd.S().column_vector();
    let u = evd.U();
    (
        DVector::from_fn(n, |i, _| s[i]),
        DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
    )
}

/// Orthonormal basis (columns) of `{x : |A x| <= abs_tol}` up to singular
/// vector resolution.
pub(crate) fn null_space(a: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let (sv, v) = right_svd(a);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= abs_tol).collect();
    DMatrix::from_fn(a.ncols(), keep.len(), |r, c| v[(r, keep[c])])
}

/// Minimum-norm least-squares solution of `A x = b`, ignoring singular
/// values below `rel_cut` times the largest. Also returns the numerical rank.
pub(crate) fn min_norm_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rel_cut: f64,
) -> (DVector<f64>, usize) {
    let (sv, v) = right_svd(a);
    let mut x = DVector::zeros(a.ncols());
    let smax = sv.get(0).copied().unwrap_or(0.0);
    let mut rank = 0;
    for i in 0..sv.len() {
        if !(sv[i] > rel_cut * smax) {
            break;
        }
        let vi = v.column(i);
        let av = a * vi;
        x += vi * (av.dot(b) / (sv[i] * sv[i]));
        rank += 1;
    }
    (x, rank)
}

/// Pseudo-inverse of a symmetric matrix, dropping eigenvalues below
/// `rel_cut` times the largest magnitude.
pub(crate) fn sym_pinv(a: &DMatrix<f64>, rel_cut: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let max = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..vals.len() {
        if vals[i].abs() > rel_cut * max {
            let v = vecs.column(i);
            out += v * v.transpose() / vals[i];
        }
    }
    out
}

/// Principal axes of a point set about its centroid: columns sorted by
/// decreasing spread, with the matching singular values of the centered
/// coordinate matrix.
pub(crate) fn principal_axes(points: &[Vec3]) -> (Matrix3<f64>, [f64; 3]) {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    let yt = DMatrix::from_fn(points.len(), 3, |i, a| points[i][a] - c[a]);
    let (sv, v) = right_svd(&yt);
    (Matrix3::from_fn(|r, c| v[(r, c)]), [sv[0], sv[1], sv[2]])
}
