//! Greedy vertex-sparse shapes.
//!
//! The support grows one vertex at a time. For a support set `S` the best
//! shape is the right singular vector of `B` restricted to the coordinates of
//! `S` with the smallest singular value; that value is its residual.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use super::{Shape, ShapeLabel};
use crate::error::{PmError, Result};
use crate::subspace::SubspaceBasis;

/// Vertices whose displacement exceeds `1e-8` of the largest one.
pub fn support_of(d: &DVector<f64>) -> Vec<usize> {
    let n = d.len() / 3;
    let mag: Vec<f64> = (0..n)
        .map(|v| (d[v].powi(2) + d[n + v].powi(2) + d[2 * n + v].powi(2)).sqrt())
        .collect();
    let max = mag.iter().copied().fold(0.0, f64::max);
    (0..n)
        .filter(|&v| max > 0.0 && mag[v] > 1e-8 * max)
        .collect()
}

/// Outcome of a pursuit, successful or not.
#[derive(Debug, Clone)]
pub struct SparsePursuit {
    /// Best shape found on the final support.
    pub best: Shape,
    /// Support set after each step.
    pub supports: Vec<Vec<usize>>,
    /// Residual after each step; nonincreasing.
    pub trace: Vec<f64>,
    pub converged: bool,
}

struct Restricted<'a> {
    bt: CsrMatrix<f64>,
    n: usize,
    basis: &'a SubspaceBasis,
}

impl Restricted<'_> {
    /// Smallest singular value and vector of `B` restricted to `support`.
    fn best(&self, support: &[usize]) -> (f64, DVector<f64>) {
        let cols: Vec<usize> = (0..3)
            .flat_map(|a| support.iter().map(move |&v| a * self.n + v))
            .collect();
        let mut row_index: HashMap<usize, usize> = HashMap::new();
        let mut entries = Vec::new();
        for (j, &c) in cols.iter().enumerate() {
            let col = self.bt.row(c);
            for (&r, &val) in col.col_indices().iter().zip(col.values()) {
                let next = row_index.len();
                let i = *row_index.entry(r).or_insert(next);
                entries.push((i, j, val));
            }
        }
        let rows = row_index.len().max(cols.len());
        let mut m = DMatrix::zeros(rows, cols.len());
        for (i, j, v) in entries {
            m[(i, j)] += v;
        }
        let (sv, v) = crate::linalg::right_svd(&m);
        let k = sv.len() - 1;
        let s = sv[k];
        let mut d = DVector::zeros(3 * self.n);
        for (j, &c) in cols.iter().enumerate() {
            d[c] = v[(j, k)];
        }
        (s, d)
    }

    fn candidates(&self, support: &[usize]) -> BTreeSet<usize> {
        let mesh = self.basis.source();
        let topo = mesh.topology();
        let inside: BTreeSet<usize> = support.iter().copied().collect();
        support
            .iter()
            .flat_map(|&v| topo.vertex_faces[v].iter())
            .flat_map(|&f| mesh.face(f).iter().copied())
            .filter(|v| !inside.contains(v))
            .collect()
    }
}

/// Runs the greedy pursuit until the residual drops to `residual_tol` or the
/// support reaches `target_support` vertices.
pub fn sparse_pursuit(
    basis: &SubspaceBasis,
    seed: Option<usize>,
    target_support: usize,
    residual_tol: f64,
) -> Result<SparsePursuit> {
    let n = basis.num_vertices();
    if n == 0 || target_support == 0 {
        return Err(PmError::InvalidArgument(
            "empty mesh or zero support budget".into(),
        ));
    }
    let ctx = Restricted {
        bt: basis.constraints().matrix().transpose(),
        n,
        basis,
    };
    let seed = match seed {
        Some(s) if s < n => s,
        Some(s) => {
            return Err(PmError::InvalidArgument(format!(
                "seed vertex {s} out of range"
            )))
        }
        None => (0..n)
            .map(|v| (ctx.best(&[v]).0, v))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
            .expect("nonempty mesh"),
    };
    let mut support = vec![seed];
    let (mut res, mut vec) = ctx.best(&support);
    let mut trace = vec![res];
    let mut supports = vec![support.clone()];
    while res > residual_tol && support.len() < target_support {
        let mut pick: Option<(f64, usize, DVector<f64>)> = None;
        for c in ctx.candidates(&support) {
            let mut trial = support.clone();
            trial.push(c);
            let (s, d) = ctx.best(&trial);
            if pick.as_ref().map_or(true, |p| s < p.0) {
                pick = Some((s, c, d));
            }
        }
        let Some((s, c, d)) = pick else { break };
        support.push(c);
        res = s;
        vec = d;
        trace.push(res);
        supports.push(support.clone());
    }
    let converged = res <= residual_tol;
    Ok(SparsePursuit {
        best: Shape::new(basis, vec, ShapeLabel::Sparse),
        supports,
        trace,
        converged,
    })
}

/// Sparse shape with at most `target_support` vertices and residual at most
/// `residual_tol`.
pub fn sparse_shape(
    basis: &SubspaceBasis,
    seed: Option<usize>,
    target_support: usize,
    residual_tol: f64,
) -> Result<Shape> {
    let p = sparse_pursuit(basis, seed, target_support, residual_tol)?;
    if p.converged {
        Ok(p.best)
    } else {
        Err(PmError::SparseInfeasible {
            best_residual: p.best.residual,
            support: support_of(&p.best.displacement).len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::subspace::{subspace, CaseAssignment};

    #[test]
    fn flat_grid_lifts_one_line() {
        let m = corpus::quad_grid(4, 4);
        let b = subspace(&m, &CaseAssignment::affine()).unwrap();
        let s = sparse_shape(&b, Some(12), 25, 1e-10).unwrap();
        let sup = support_of(&s.displacement);
        assert_eq!(sup.len(), 5, "{sup:?}");
        let same_row = sup.iter().all(|&v| v / 5 == sup[0] / 5);
        let same_col = sup.iter().all(|&v| v % 5 == sup[0] % 5);
        assert!(same_row || same_col, "{sup:?}");
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn budget_too_small_fails_with_best_residual() {
        let m = corpus::quad_grid(4, 4);
        let b = subspace(&m, &CaseAssignment::affine()).unwrap();
        match sparse_shape(&b, Some(12), 2, 1e-10) {
            Err(PmError::SparseInfeasible { best_residual, .. }) => assert!(best_residual > 1e-3),
            other => panic!("{other:?}"),
        }
    }
}
