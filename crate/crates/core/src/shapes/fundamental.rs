use nalgebra::{DVector, Vector3};

use super::{Laplacian, Shape, ShapeLabel};
use crate::error::{PmError, Result};
use crate::subspace::SubspaceBasis;

pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Unit displacement of vertex `i` along `dir`.
pub fn impulse(n: usize, i: usize, dir: Vector3<f64>) -> DVector<f64> {
    let mut d = DVector::zeros(3 * n);
    for a in 0..3 {
        d[a * n + i] = dir[a];
    }
    d
}

/// Subspace element closest to a vertical impulse at `vertex`, smoothed by
/// `lambda ||L x||^2`.
pub fn fundamental_shape(
    basis: &SubspaceBasis,
    l: &Laplacian,
    vertex: usize,
    lambda: f64,
) -> Result<Shape> {
    fundamental_shape_dir(basis, l, vertex, lambda, Vector3::z())
}

/// As [`fundamental_shape`] with an arbitrary impulse direction.
pub fn fundamental_shape_dir(
    basis: &SubspaceBasis,
    l: &Laplacian,
    vertex: usize,
    lambda: f64,
    dir: Vector3<f64>,
) -> Result<Shape> {
    let n = basis.num_vertices();
    if vertex >= n {
        return Err(PmError::InvalidArgument(format!(
            "vertex {vertex} out of range"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(PmError::InvalidArgument(
            "lambda must be nonnegative".into(),
        ));
    }
    let delta = impulse(n, vertex, dir);
    let rhs = basis.coords(&delta);
    let w = if lambda == 0.0 {
        rhs
    } else {
        let lq = l.apply_columns(basis.q());
        let d = basis.ndof();
        let mut system = lq.tr_mul(&lq) * lambda;
        for i in 0..d {
            system[(i, i)] += 1.0;
        }
        system
            .cholesky()
            .expect("identity plus a Gram matrix is positive definite")
            .solve(&rhs)
    };
    Ok(Shape::new(
        basis,
        basis.expand(&w),
        ShapeLabel::Fundamental(vertex),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::shapes::graph_laplacian;
    use crate::subspace::{subspace, CaseAssignment};

    #[test]
    fn zero_lambda_is_projection() {
        let m = corpus::cube();
        let b = subspace(&m, &CaseAssignment::affine()).unwrap();
        let s = fundamental_shape(&b, &graph_laplacian(&m), 3, 0.0).unwrap();
        let p = b.project(&impulse(8, 3, Vector3::z()));
        assert!((s.displacement - p).norm() < 1e-12);
    }

    #[test]
    fn regularization_smooths() {
        let m = corpus::cube();
        let l = graph_laplacian(&m);
        let b = subspace(&m, &CaseAssignment::affine()).unwrap();
        let s0 = fundamental_shape(&b, &l, 3, 0.0).unwrap();
        let s10 = fundamental_shape(&b, &l, 3, 10.0).unwrap();
        assert!(l.apply(&s10.displacement).norm() < l.apply(&s0.displacement).norm());
        assert!(s10.residual < 1e-10);
    }
}
