//! Pairs of planar polygons and the two relationship tests.

use nalgebra::{DMatrix, Matrix3, Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};
use crate::linalg::principal_axes;
use crate::mesh::Vec3;

/// Relative tolerance for both relationship tests and planarity of spans.
pub const RELATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationshipKind {
    Type1,
    Type2,
    Both,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipWitness {
    pub kind: RelationshipKind,
    /// Least-squares `A` with `X = A Y` on centered polygons.
    pub a: Option<[[f64; 3]; 3]>,
    /// `c` with `N_Y X = c N_X Y`; absent when both sides vanish.
    pub c: Option<f64>,
    pub type1_residual: f64,
    pub type2_residual: f64,
}

fn centered(points: &[Vec3]) -> DMatrix<f64> {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    DMatrix::from_fn(3, points.len(), |a, i| points[i][a] - c[a])
}

fn check_polygon(points: &[Vec3], which: &str) -> Result<(Vec3, f64)> {
    if points.len() <= 3 {
        return Err(PmError::InvalidArgument(format!(
            "polygon {which} needs more than 3 vertices"
        )));
    }
    let (axes, s) = principal_axes(points);
    if !(s[1] > 1e-12 * s[0]) {
        return Err(PmError::InvalidArgument(format!(
            "polygon {which} is degenerate"
        )));
    }
    if s[2] > RELATION_TOL * s[0] {
        return Err(PmError::InvalidArgument(format!(
            "polygon {which} is not planar"
        )));
    }
    Ok((axes.column(2).into_owned(), s[0]))
}

/// Smallest singular value of the centered points over the largest one of
/// `scale`: zero exactly for planar (or degenerate) point sets.
pub fn nonplanarity(points: &[Vec3], scale: f64) -> f64 {
    let (_, s) = principal_axes(points);
    if scale > 0.0 {
        s[2] / scale
    } else {
        0.0
    }
}

/// Tests both relationship types between two planar k-gons (k > 3).
pub fn relationship_type(x: &[Vec3], y: &[Vec3]) -> Result<RelationshipWitness> {
    if x.len() != y.len() {
        return Err(PmError::InvalidArgument(
            "polygons differ in vertex count".into(),
        ));
    }
    let (n_x, sx) = check_polygon(x, "X")?;
    let (n_y, sy) = check_polygon(y, "Y")?;
    let (xc, yc) = (centered(x), centered(y));

    // Type 1: X = A Y. Y has rank 2, so A is taken minimal-norm.
    let yt = yc.transpose();
    let rows: Vec<_> = (0..3)
        .map(|a| crate::linalg::min_norm_solve(&yt, &xc.row(a).transpose(), 1e-12).0)
        .collect();
    let a = Matrix3::from_fn(|r, c| rows[r][c]);
    let ay = DMatrix::from_fn(3, 3, |r, c| a[(r, c)]) * &yc;
    let type1_residual = (&xc - ay).norm() / xc.norm();

    // Type 2: rows N_Y X and N_X Y collinear.
    let r1 = xc.tr_mul(&DMatrix::from_column_slice(3, 1, n_y.as_slice()));
    let r2 = yc.tr_mul(&DMatrix::from_column_slice(3, 1, n_x.as_slice()));
    let scale = sx.max(sy);
    let (c, type2_residual) = if r2.norm() <= RELATION_TOL * scale {
        if r1.norm() <= RELATION_TOL * scale {
            (None, r1.norm().max(r2.norm()) / scale)
        } else {
            (None, r1.norm() / scale)
        }
    } else {
        let c = r1.dot(&r2) / r2.norm_squared();
        (Some(c), (&r1 - &r2 * c).norm() / scale)
    };

    let t1 = type1_residual <= RELATION_TOL;
    let t2 = type2_residual <= RELATION_TOL;
    let kind = match (t1, t2) {
        (true, true) => RelationshipKind::Both,
        (true, false) => RelationshipKind::Type1,
        (false, true) => RelationshipKind::Type2,
        (false, false) => RelationshipKind::None,
    };
    Ok(RelationshipWitness {
        kind,
        a: Some([
            [a[(0, 0)], a[(0, 1)], a[(0, 2)]],
            [a[(1, 0)], a[(1, 1)], a[(1, 2)]],
            [a[(2, 0)], a[(2, 1)], a[(2, 2)]],
        ]),
        c,
        type1_residual,
        type2_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub spans: bool,
    pub max_nonplanarity: f64,
}

/// Samples `alpha X + beta Y` on the unit circle; true iff every sample is
/// planar within [`RELATION_TOL`].
pub fn spans_planar_space(x: &[Vec3], y: &[Vec3], samples: usize, seed: u64) -> Result<SpanReport> {
    if x.len() != y.len() {
        return Err(PmError::InvalidArgument(
            "polygons differ in vertex count".into(),
        ));
    }
    let (_, sx) = principal_axes(x);
    let (_, sy) = principal_axes(y);
    let scale = sx[0].max(sy[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (alpha, beta) = (t.cos(), t.sin());
        let z: Vec<Vec3> = x.iter().zip(y).map(|(p, q)| p * alpha + q * beta).collect();
        worst = worst.max(nonplanarity(&z, scale));
    }
    Ok(SpanReport {
        spans: worst <= RELATION_TOL,
        max_nonplanarity: worst,
    })
}

/// How a generated pair was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairConstruction {
    /// `X = A Y + t` for a random nonsingular `A`.
    Affine,
    /// Random normal for X, in-plane coordinates chosen so `N_Y X = c N_X Y`.
    CrossNormal,
    /// X keeps Y's normal; its vertices slide freely within a parallel plane.
    ParallelPlanes,
    /// Independent random planar polygons.
    Unrelated,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = n.cross(&helper).normalize();
    (u, n.cross(&u))
}

/// Random star-shaped planar k-gon.
pub fn random_planar_polygon(k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let n = random_unit(rng);
    let (u, v) = frame(&n);
    let origin = Vec3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let mut angles: Vec<f64> = (0..k)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
        .iter()
        .map(|&t| {
            let r = rng.gen_range(0.5..1.5);
            origin + u * (r * t.cos()) + v * (r * t.sin())
        })
        .collect()
}

fn construct(kind: PairConstruction, k: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec3>, Vec<Vec3>) {
    let y = random_planar_polygon(k, rng);
    let (axes, _) = principal_axes(&y);
    let n_y: Vec3 = axes.column(2).into_owned();
    let c_y = y.iter().sum::<Vec3>() / k as f64;
    let x = match kind {
        PairConstruction::Affine => {
            let a = loop {
                let a = Matrix3::<f64>::from_fn(|_, _| rng.gen_range(-1.5..1.5));
                if a.determinant().abs() > 0.2 {
                    break a;
                }
            };
            let t = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            y.iter().map(|p| a * p + t).collect()
        }
        PairConstruction::CrossNormal => {
            let n_x = loop {
                let n = random_unit(rng);
                if n.dot(&n_y).abs() < 0.9 {
                    break n;
                }
            };
            let c: f64 = rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (u, v) = frame(&n_x);
            let g = nalgebra::Vector2::new(u.dot(&n_y), v.dot(&n_y));
            let g_perp = nalgebra::Vector2::new(-g.y, g.x);
            let mut s: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = s.iter().sum::<f64>() / k as f64;
            s.iter_mut().for_each(|x| *x -= mean);
            let origin = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            (0..k)
                .map(|i| {
                    let t = c * n_x.dot(&(y[i] - c_y));
                    let a = g * (t / g.norm_squared()) + g_perp * s[i];
                    origin + u * a.x + v * a.y
                })
                .collect()
        }
        PairConstruction::ParallelPlanes => {
            let (u, v) = frame(&n_y);
            let h: f64 = rng.gen_range(-1.0..1.0);
            let rot =
                Rotation3::from_axis_angle(&Unit::new_normalize(n_y), rng.gen_range(0.0..6.0));
            y.iter()
                .map(|p| {
                    let slide = u * rng.gen_range(-0.4..0.4) + v * rng.gen_range(-0.4..0.4);
                    rot * (p - c_y) + c_y + slide + n_y * h
                })
                .collect()
        }
        PairConstruction::Unrelated => random_planar_polygon(k, rng),
    };
    (x, y)
}

/// Generated polygon pair for cross-validating the two tests.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonPair {
    pub construction: PairConstruction,
    pub x: Vec<Vec3>,
    pub y: Vec<Vec3>,
}

/// `per_kind` pairs of each construction with k drawn from 4..=8.
pub fn generate_pairs(per_kind: usize, seed: u64) -> Vec<PolygonPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        PairConstruction::Affine,
        PairConstruction::CrossNormal,
        PairConstruction::ParallelPlanes,
        PairConstruction::Unrelated,
    ];
    let mut out = Vec::with_capacity(per_kind * kinds.len());
    for construction in kinds {
        for _ in 0..per_kind {
            let k = rng.gen_range(4..=8);
            let (x, y) = construct(construction, k, &mut rng);
            out.push(PolygonPair { construction, x, y });
        }
    }
    out
}
