//! Orthonormal null space of a sparse matrix.
//!
//! Householder QR of `B^T`, processed row by row of `B` in a bandwidth
//! reducing order. Each reflector pivots on the leftmost remaining entry of
//! its row, so no free position is left behind inside its support and the
//! reflectors stay within the band. Rows that are nearly dependent on the
//! rows before them get no reflector, which keeps the factor well
//! conditioned. Columns of `Q` at non-pivot positions span the candidate null
//! space; a dense SVD of `B` restricted to it then removes the directions
//! those rows still constrain.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

/// Rows whose residual after elimination falls below this fraction of their
/// norm are treated as dependent.
const SKIP_RATIO: f64 = 1e-9;
/// Acceptance ratios tried in turn; rows below the last one get no reflector.
const ACCEPT_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Upper end, relative to the largest singular value, of directions that
/// `refine` tries to polish into the null space.
const POLISH_RATIO: f64 = 1e-6;
const CGLS_ITERATIONS: usize = 5000;

pub(crate) struct NullspaceResult {
    pub q: DMatrix<f64>,
    pub sigma_max: f64,
}

struct Reflector {
    start: usize,
    v: Vec<f64>,
    tau: f64,
}

impl Reflector {
    fn end(&self) -> usize {
        self.start + self.v.len()
    }

    /// Applies `I - tau v v^T` to `w`, returning the touched range.
    fn apply(&self, w: &mut [f64], lo: usize, hi: usize) -> bool {
        let (a, b) = (self.start.max(lo), self.end().min(hi));
        if a >= b {
            return false;
        }
        let dot: f64 = (a..b).map(|i| self.v[i - self.start] * w[i]).sum();
        if dot == 0.0 {
            return false;
        }
        let s = self.tau * dot;
        for (i, vi) in self.v.iter().enumerate() {
            w[self.start + i] -= s * vi;
        }
        true
    }
}

/// Reverse Cuthill-McKee order of the columns of `b` (column graph: two
/// columns are adjacent when they share a row). Columns not used by any row
/// go last. Returns `order[position] = column`.
pub(crate) fn rcm_order(b: &CsrMatrix<f64>) -> Vec<usize> {
    let n = b.ncols();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for row in b.row_iter() {
        let cols = row.col_indices();
        for &c in cols {
            adj[c].extend(cols.iter().copied().filter(|&d| d != c));
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut isolated = Vec::new();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&c| (degree[c], c));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        if degree[seed] == 0 {
            visited[seed] = true;
            isolated.push(seed);
            continue;
        }
        let start = peripheral(&adj, &degree, seed);
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(c) = queue.pop_front() {
            comp.push(c);
            let mut next: Vec<usize> = adj[c].iter().copied().filter(|&d| !visited[d]).collect();
            next.sort_by_key(|&d| (degree[d], d));
            for d in next {
                visited[d] = true;
                queue.push_back(d);
            }
        }
        comp.reverse();
        order.extend(comp);
    }
    order.extend(isolated);
    order
}

/// Pseudo-peripheral node of the component containing `seed`.
fn peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut current = seed;
    let mut best_ecc = 0;
    for _ in 0..4 {
        let (last_level, ecc) = bfs_levels(adj, current);
        let cand = *last_level
            .iter()
            .min_by_key(|&&c| (degree[c], c))
            .expect("nonempty level");
        if ecc <= best_ecc {
            break;
        }
        best_ecc = ecc;
        current = cand;
    }
    current
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (Vec<usize>, usize) {
    let mut dist = std::collections::HashMap::new();
    dist.insert(start, 0usize);
    let mut level = vec![start];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &c in &level {
            for &d in &adj[c] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(d) {
                    e.insert(depth + 1);
                    next.push(d);
                }
            }
        }
        if next.is_empty() {
            return (level, depth);
        }
        level = next;
        depth += 1;
    }
}

fn csr_mul_vec(b: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for (r, row) in b.row_iter().enumerate() {
        out[r] = row
            .col_indices()
            .iter()
            .zip(row.values())
            .map(|(&c, &v)| v * x[c])
            .sum();
    }
}

fn csr_tmul_vec(b: &CsrMatrix<f64>, y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, row) in b.row_iter().enumerate() {
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            out[c] += v * y[r];
        }
    }
}

/// Largest singular value of `b` by power iteration on `B^T B`.
pub(crate) fn sigma_max(b: &CsrMatrix<f64>) -> f64 {
    let (m, n) = (b.nrows(), b.ncols());
    if m == 0 || n == 0 || b.nnz() == 0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0)
        .collect();
    let mut y = vec![0.0; m];
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        csr_mul_vec(b, &x, &mut y);
        let next = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        csr_tmul_vec(b, &y, &mut x);
        if (next - lambda).abs() <= 1e-12 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Power iteration approaches from below; a small margin keeps tolerances safe.
    lambda * 1.01
}

/// Reduces row `r` by the existing reflectors and appends a new one when the
/// residual exceeds `accept` times the row norm. Returns that ratio.
fn eliminate(
    b: &CsrMatrix<f64>,
    r: usize,
    position: &[usize],
    reflectors: &mut Vec<Reflector>,
    pivot: &mut [bool],
    w: &mut [f64],
    accept: f64,
) -> f64 {
    let row = b.row(r);
    let norm0 = row.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (usize::MAX, 0);
    for (&c, &v) in row.col_indices().iter().zip(row.values()) {
        let p = position[c];
        w[p] += v;
        lo = lo.min(p);
        hi = hi.max(p + 1);
    }
    for h in reflectors.iter() {
        if h.apply(w, lo, hi) {
            lo = lo.min(h.start);
            hi = hi.max(h.end());
        }
    }
    let mut res2 = 0.0;
    let (mut rlo, mut rhi) = (usize::MAX, 0);
    for i in lo..hi {
        if pivot[i] || w[i] == 0.0 {
            continue;
        }
        res2 += w[i] * w[i];
        rlo = rlo.min(i);
        rhi = i + 1;
    }
    let res = res2.sqrt();
    let ratio = res / norm0;
    if ratio > accept {
        let p = rlo;
        let alpha = w[p];
        let beta = if alpha >= 0.0 { -res } else { res };
        let scale = 1.0 / (alpha - beta);
        let v: Vec<f64> = (rlo..rhi)
            .map(|i| {
                if i == p {
                    1.0
                } else if pivot[i] {
                    0.0
                } else {
                    w[i] * scale
                }
            })
            .collect();
        reflectors.push(Reflector {
            start: rlo,
            v,
            tau: (beta - alpha) / beta,
        });
        pivot[p] = true;
    }
    for x in &mut w[lo..hi] {
        *x = 0.0;
    }
    ratio
}

/// Orthonormal basis of `{x : B x = 0}` up to relative tolerance `tol`.
pub(crate) fn sparse_nullspace(b: &CsrMatrix<f64>, tol: f64) -> NullspaceResult {
    let (m, n) = (b.nrows(), b.ncols());
    let smax = sigma_max(b);
    if m == 0 || smax == 0.0 {
        return NullspaceResult {
            q: DMatrix::identity(n, n),
            sigma_max: smax,
        };
    }
    let order = rcm_order(b);
    let mut position = vec![0; n];
    for (p, &c) in order.iter().enumerate() {
        position[c] = p;
    }
    let span = |r: usize| {
        let cols = b
            .row(r)
            .col_indices()
            .iter()
            .map(|&c| position[c])
            .collect::<Vec<_>>();
        (
            cols.iter().copied().min().unwrap_or(usize::MAX),
            cols.iter().copied().max().unwrap_or(0),
        )
    };
    let mut rows: Vec<(usize, usize, usize)> = (0..m)
        .map(|r| {
            let (lo, hi) = span(r);
            (lo, hi, r)
        })
        .collect();
    rows.sort_unstable();

    let mut reflectors: Vec<Reflector> = Vec::new();
    let mut pivot = vec![false; n];
    let mut w = vec![0.0; n];
    // Rows that are only weakly independent of the rows before them would
    // make the factor ill-conditioned. They are retried once the stronger
    // rows are in, with a threshold that drops step by step; whatever is
    // still weak at the end is left to the dense refinement, which sees
    // exactly their residuals on the candidate space.
    let mut pending: Vec<usize> = rows.iter().map(|&(_, _, r)| r).collect();
    for accept in ACCEPT_SCHEDULE {
        let mut deferred = Vec::new();
        for &r in &pending {
            let ratio = eliminate(b, r, &position, &mut reflectors, &mut pivot, &mut w, accept);
            if ratio > SKIP_RATIO && ratio <= accept {
                deferred.push(r);
            }
        }
        pending = deferred;
    }

    // Candidate basis: Q e_j for non-pivot positions j, built as one block.
    // Columns no row touches are exact null vectors and skip the block.
    let mut touched = vec![false; n];
    for &c in b.col_indices() {
        touched[position[c]] = true;
    }
    let (free, untouched): (Vec<usize>, Vec<usize>) =
        (0..n).filter(|&j| !pivot[j]).partition(|&j| touched[j]);
    let d = free.len();
    let mut qp = DMatrix::zeros(n, d);
    for (t, &j) in free.iter().enumerate() {
        qp[(j, t)] = 1.0;
    }
    let mut w = DVector::zeros(d);
    for h in reflectors.iter().rev() {
        let v = DVector::from_column_slice(&h.v);
        let mut block = qp.view_mut((h.start, 0), (h.v.len(), d));
        w.gemv_tr(1.0, &block, &v, 0.0);
        block.ger(-h.tau, &v, &w, 1.0);
    }
    let mut q = DMatrix::zeros(n, d);
    for (i, &c) in order.iter().enumerate() {
        q.row_mut(c).copy_from(&qp.row(i));
    }
    let q = refine(b, q, tol, smax);
    let k = q.ncols();
    let mut full = q.resize_horizontally(k + untouched.len(), 0.0);
    for (t, &j) in untouched.iter().enumerate() {
        full[(order[j], k + t)] = 1.0;
    }

    NullspaceResult {
        q: full,
        sigma_max: smax,
    }
}

/// Keeps the combinations of candidate columns with `|B x| <= tol * smax`.
///
/// Directions just above that cut, down to `POLISH_RATIO`, are usually true
/// null vectors blurred by an ill-conditioned factor. They are projected onto
/// the null space with CGLS and kept if they survive.
fn refine(b: &CsrMatrix<f64>, q: DMatrix<f64>, tol: f64, smax: f64) -> DMatrix<f64> {
    let d = q.ncols();
    if d == 0 {
        return q;
    }
    let abs_tol = tol * smax;
    let m = b.nrows();
    let mut c = DMatrix::zeros(m, d);
    let mut buf = vec![0.0; m];
    for t in 0..d {
        csr_mul_vec(b, q.column(t).as_slice(), &mut buf);
        c.column_mut(t).copy_from_slice(&buf);
    }
    let worst = (0..d).map(|t| c.column(t).norm()).fold(0.0, f64::max);
    if worst * (d as f64).sqrt() <= abs_tol {
        return q;
    }
    let (sv, v) = crate::linalg::right_svd(&c);
    let keep: Vec<usize> = (0..d).filter(|&i| sv[i] <= abs_tol).collect();
    let mut out = &q * DMatrix::from_fn(d, keep.len(), |r, k| v[(r, keep[k])]);
    let polish_cut = POLISH_RATIO * smax;
    for i in (0..d).filter(|&i| sv[i] > abs_tol && sv[i] <= polish_cut) {
        let x = &q * v.column(i);
        let mut yv = DVector::from_vec(project_null(b, x.as_slice(), abs_tol));
        for _ in 0..2 {
            let coef = out.tr_mul(&yv);
            yv -= &out * coef;
        }
        let norm = yv.norm();
        if norm < 0.5 {
            continue;
        }
        yv /= norm;
        csr_mul_vec(b, yv.as_slice(), &mut buf);
        let res = buf.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= abs_tol {
            let k = out.ncols();
            out = out.insert_column(k, 0.0);
            out.column_mut(k).copy_from(&yv);
        } else {
            log::debug!("null direction with residual {res:e} could not be polished");
        }
    }
    out
}

/// `x - B^+ B x` by CGLS on the correction, which starts at zero and so
/// converges to the minimum-norm one.
fn project_null(b: &CsrMatrix<f64>, x: &[f64], abs_tol: f64) -> Vec<f64> {
    let (m, n) = (b.nrows(), b.ncols());
    let mut r = vec![0.0; m];
    csr_mul_vec(b, x, &mut r);
    let mut delta = vec![0.0; n];
    let mut s = vec![0.0; n];
    csr_tmul_vec(b, &r, &mut s);
    let mut p = s.clone();
    let mut gamma: f64 = s.iter().map(|v| v * v).sum();
    let mut qv = vec![0.0; m];
    for _ in 0..CGLS_ITERATIONS {
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= 1e-3 * abs_tol || gamma == 0.0 {
            break;
        }
        csr_mul_vec(b, &p, &mut qv);
        let qq: f64 = qv.iter().map(|v| v * v).sum();
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (di, pi) in delta.iter_mut().zip(&p) {
            *di += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&qv) {
            *ri -= alpha * qi;
        }
        csr_tmul_vec(b, &r, &mut s);
        let next: f64 = s.iter().map(|v| v * v).sum();
        let beta = next / gamma;
        gamma = next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    x.iter().zip(&delta).map(|(a, d)| a - d).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::CooMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to_csr(d: &DMatrix<f64>) -> CsrMatrix<f64> {
        let mut coo = CooMatrix::new(d.nrows(), d.ncols());
        for r in 0..d.nrows() {
            for c in 0..d.ncols() {
                if d[(r, c)] != 0.0 {
                    coo.push(r, c, d[(r, c)]);
                }
            }
        }
        CsrMatrix::from(&coo)
    }

    fn dense_nullity(d: &DMatrix<f64>) -> usize {
        let sv = crate::linalg::singular_values(d);
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
        d.ncols() - rank
    }

    fn check(d: &DMatrix<f64>) {
        let r = sparse_nullspace(&to_csr(d), 1e-10);
        assert_eq!(r.q.ncols(), dense_nullity(d));
        let qtq = r.q.transpose() * &r.q;
        assert!((qtq - DMatrix::identity(r.q.ncols(), r.q.ncols())).norm() < 1e-10);
        assert!((d * &r.q).norm() < 1e-9 * r.sigma_max.max(1.0));
    }

    #[test]
    fn random_banded_with_dependent_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = 30 + trial;
            let m = 20 + trial / 2;
            let mut d = DMatrix::zeros(m, n);
            for r in 0..m {
                let start = rng.gen_range(0..n - 5);
                for c in start..start + 5 {
                    d[(r, c)] = rng.gen_range(-1.0..1.0);
                }
            }
            // Append exact combinations of earlier rows.
            let extra = DMatrix::from_fn(3, m, |_, _| rng.gen_range(-1.0..1.0)) * &d;
            let stacked =
                DMatrix::from_fn(
                    m + 3,
                    n,
                    |r, c| if r < m { d[(r, c)] } else { extra[(r - m, c)] },
                );
            check(&stacked);
        }
    }

    #[test]
    fn nearly_dependent_rows() {
        let mut d = DMatrix::zeros(3, 6);
        d[(0, 0)] = 1.0;
        d[(0, 1)] = 1.0;
        d[(1, 1)] = 1.0;
        d[(1, 2)] = 1.0;
        d[(2, 0)] = 1.0;
        d[(2, 1)] = 2.0;
        d[(2, 2)] = 1.0 + 1e-11;
        check(&d);
    }

    #[test]
    fn empty_and_zero_rows() {
        let r = sparse_nullspace(&to_csr(&DMatrix::zeros(0, 4)), 1e-10);
        assert_eq!(r.q.ncols(), 4);
        let r = sparse_nullspace(&to_csr(&DMatrix::zeros(3, 4)), 1e-10);
        assert_eq!(r.q.ncols(), 4);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let mut d = DMatrix::zeros(4, 7);
        d[(0, 3)] = 1.0;
        d[(0, 5)] = 1.0;
        d[(1, 5)] = 1.0;
        d[(1, 0)] = 1.0;
        d[(2, 2)] = 1.0;
        d[(3, 2)] = 1.0;
        d[(3, 6)] = 1.0;
        let mut o = rcm_order(&to_csr(&d));
        assert_eq!(*o.last().unwrap(), 4);
        o.sort();
        assert_eq!(o, (0..7).collect::<Vec<_>>());
    }
}
