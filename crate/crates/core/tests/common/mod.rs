//! Dense brute-force oracles shared by the integration tests.
//!
//! Everything here works on full dense matrices with faer decompositions, so
//! it shares no code path with the sparse library routines it checks.

#![allow(dead_code)]

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, Matrix3};
use pmspace::{Mesh, Vec3};

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// All singular values (descending) and the full right singular basis.
pub fn svd_right(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    if a.nrows() == 0 {
        return (vec![0.0; n], DMatrix::identity(n, n));
    }
    let svd = to_faer(a).svd().expect("svd");
    let s = svd.S().column_vector();
    let v = svd.V();
    let sv = (0..n).map(|i| if i < s.nrows() { s[i] } else { 0.0 }).collect();
    (sv, DMatrix::from_fn(n, n, |i, j| v[(i, j)]))
}

/// Null space of `a`: right singular vectors with `sigma <= rel * sigma_max`.
/// Also returns the first singular value above the cut (the gap), or 0.
pub fn dense_null_space(a: &DMatrix<f64>, rel: f64) -> (DMatrix<f64>, f64) {
    let (sv, v) = svd_right(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rel * smax;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    let gap = sv
        .iter()
        .copied()
        .filter(|&s| s > cut)
        .fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap / smax } else { 0.0 };
    (
        DMatrix::from_fn(a.ncols(), keep.len(), |r, c| v[(r, keep[c])]),
        gap,
    )
}

/// Ascending eigenvalues and eigenvectors of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let evd = to_faer(a).self_adjoint_eigen(Side::Lower).expect("evd");
    let s = evd.S().column_vector();
    let u = evd.U();
    (
        (0..n).map(|i| s[i]).collect(),
        DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
    )
}

/// Uniform graph Laplacian built straight from the face cycles, expanded to
/// all three axes.
pub fn dense_laplacian3(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.num_vertices();
    let mut adj = DMatrix::<f64>::zeros(n, n);
    for f in mesh.faces() {
        for i in 0..f.len() {
            let (a, b) = (f[i], f[(i + 1) % f.len()]);
            adj[(a, b)] = 1.0;
            adj[(b, a)] = 1.0;
        }
    }
    let mut l = DMatrix::zeros(3 * n, 3 * n);
    for ax in 0..3 {
        for i in 0..n {
            let deg: f64 = adj.row(i).sum();
            l[(ax * n + i, ax * n + i)] = deg;
            for j in 0..n {
                if adj[(i, j)] != 0.0 {
                    l[(ax * n + i, ax * n + j)] = -1.0;
                }
            }
        }
    }
    l
}

/// `||(I - A A^T) B||` for orthonormal `A`: how far `span B` sticks out of `span A`.
pub fn span_excess(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (b - a * a.tr_mul(b)).norm()
}

/// Least-squares solution of `A x = b` through the dense SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = to_faer(a).thin_svd().expect("svd");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let smax = if k > 0 { s[0] } else { 0.0 };
    let mut x = DVector::zeros(a.ncols());
    for i in 0..k {
        if s[i] <= 1e-12 * smax {
            continue;
        }
        let coef: f64 = (0..a.nrows()).map(|r| u[(r, i)] * b[r]).sum::<f64>() / s[i];
        for j in 0..a.ncols() {
            x[j] += coef * v[(j, i)];
        }
    }
    x
}

/// Rotation closest to the cross-covariance `m = sum x_i p_i^T`.
pub fn procrustes(m: &Matrix3<f64>) -> Matrix3<f64> {
    let f = Mat::from_fn(3, 3, |i, j| m[(i, j)]);
    let svd = f.svd().expect("svd");
    let (u, v) = (svd.U(), svd.V());
    let un = Matrix3::from_fn(|i, j| u[(i, j)]);
    let vn = Matrix3::from_fn(|i, j| v[(i, j)]);
    let d = (un * vn.transpose()).determinant().signum();
    un * Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, d)) * vn.transpose()
}

/// Translation along one axis, unit norm.
pub fn translation(n: usize, axis: usize) -> DVector<f64> {
    let mut t = DVector::zeros(3 * n);
    for i in 0..n {
        t[axis * n + i] = 1.0 / (n as f64).sqrt();
    }
    t
}

/// Best affine map `p -> A p + t` from `a` to `b`, and its max residual.
pub fn affine_fit(a: &[Vec3], b: &[Vec3]) -> f64 {
    let m = DMatrix::from_fn(a.len(), 4, |i, j| if j < 3 { a[i][j] } else { 1.0 });
    let mut worst: f64 = 0.0;
    for ax in 0..3 {
        let rhs = DVector::from_iterator(b.len(), b.iter().map(|p| p[ax]));
        let x = lstsq(&m, &rhs);
        worst = worst.max((&m * x - rhs).amax());
    }
    worst
}

pub fn max_vertex_gap(a: &Mesh, b: &Mesh) -> f64 {
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}
