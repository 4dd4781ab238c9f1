use serde::{Deserialize, Serialize};

use super::{Mesh, Vec3};
use crate::error::{PmError, Result};

/// A face is degenerate when the second singular value of its centered vertex
/// matrix falls below this fraction of the mesh bounding-box diagonal.
pub const DEGENERACY_RATIO: f64 = 1e-9;

/// Least-squares plane of a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePlane {
    pub centroid: Vec3,
    /// Unit normal, oriented to agree with the face winding.
    pub normal: Vec3,
    /// Signed distance of the plane from the origin along `normal`.
    pub offset: f64,
}

impl FacePlane {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Best-fit plane and singular values of a point set, without any
/// degeneracy check. The normal follows the polygon winding.
pub(crate) fn fit_plane(points: &[Vec3]) -> (FacePlane, [f64; 3]) {
    let k = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / k;
    let (axes, sv) = crate::linalg::principal_axes(points);
    let mut normal: Vec3 = axes.column(2).into_owned();
    if newell_normal(points).dot(&normal) < 0.0 {
        normal = -normal;
    }
    normal.normalize_mut();
    let offset = normal.dot(&centroid);
    (
        FacePlane {
            centroid,
            normal,
            offset,
        },
        sv,
    )
}

/// Area-weighted normal of a polygon (not normalized).
pub(crate) fn newell_normal(points: &[Vec3]) -> Vec3 {
    let k = points.len();
    let c = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / k as f64;
    (0..k).fold(Vec3::zeros(), |acc, i| {
        acc + (points[i] - c).cross(&(points[(i + 1) % k] - c))
    })
}

/// Best-fit plane of a face by centered second-moment analysis.
pub fn face_plane(mesh: &Mesh, face: usize) -> Result<FacePlane> {
    let points = mesh.face_points(face);
    let (plane, sv) = fit_plane(&points);
    let scale = mesh.bbox_diagonal();
    if sv[1] < DEGENERACY_RATIO * scale || scale == 0.0 {
        return Err(PmError::DegenerateFace { face });
    }
    Ok(plane)
}

/// Max vertex distance to the best-fit plane, relative to the bounding-box
/// diagonal. Triangles are exactly planar.
pub fn planarity_error(mesh: &Mesh, face: usize) -> Result<f64> {
    if mesh.face(face).len() == 3 {
        return Ok(0.0);
    }
    let plane = face_plane(mesh, face)?;
    let dmax = mesh
        .face(face)
        .iter()
        .map(|&v| plane.signed_distance(&mesh.vertex(v)).abs())
        .fold(0.0, f64::max);
    Ok(dmax / mesh.bbox_diagonal())
}

/// Per-face planarity errors; serialized as `{"faces":[...], "max":e}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarityReport {
    pub faces: Vec<f64>,
    pub max: f64,
}

pub fn planarity_report(mesh: &Mesh) -> Result<PlanarityReport> {
    let faces = (0..mesh.num_faces())
        .map(|f| planarity_error(mesh, f))
        .collect::<Result<Vec<_>>>()?;
    let max = faces.iter().copied().fold(0.0, f64::max);
    Ok(PlanarityReport { faces, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, SymmetricEigen};

    fn square() -> Mesh {
        Mesh::from_arrays(
            &[[0., 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]],
            &[&[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_plane() {
        let p = face_plane(&square(), 0).unwrap();
        assert!((p.normal - Vec3::z()).norm() < 1e-14);
        assert!((p.centroid - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-14);
        assert!(p.offset.abs() < 1e-14);
    }

    #[test]
    fn rotated_square_plane() {
        let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let m = square();
        let rotated = m
            .with_vertices(m.vertices().iter().map(|p| r * p).collect())
            .unwrap();
        let p = face_plane(&rotated, 0).unwrap();
        assert!((p.normal - r * Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn nonplanar_quad_matches_covariance_oracle() {
        let m = Mesh::from_arrays(
            &[[0., 0., 0.], [1., 0., 0.], [1., 1., 1.], [0., 1., 0.]],
            &[&[0, 1, 2, 3]],
        )
        .unwrap();
        let plane = face_plane(&m, 0).unwrap();
        // Oracle: eigenvector of the smallest eigenvalue of the covariance.
        let pts = m.face_points(0);
        let c = pts.iter().sum::<Vec3>() / 4.0;
        let cov = pts
            .iter()
            .map(|p| (p - c) * (p - c).transpose())
            .sum::<nalgebra::Matrix3<f64>>();
        let eig = SymmetricEigen::new(cov);
        let imin = eig.eigenvalues.imin();
        let n: Vec3 = eig.eigenvectors.column(imin).into_owned();
        assert!(plane.normal.dot(&n).abs() > 1.0 - 1e-12);
        // Direct distance oracle for the planarity error.
        let dmax = pts
            .iter()
            .map(|p| n.dot(&(p - c)).abs())
            .fold(0.0, f64::max);
        let expected = dmax / m.bbox_diagonal();
        assert!((planarity_error(&m, 0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn triangle_and_hexagon_are_planar() {
        let tri =
            Mesh::from_arrays(&[[0., 0., 0.], [1., 0., 3.], [0., 2., 1.]], &[&[0, 1, 2]]).unwrap();
        assert_eq!(planarity_error(&tri, 0).unwrap(), 0.0);
        let hex: Vec<[f64; 3]> = (0..6)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 3.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let r = Rotation3::from_euler_angles(0.7, 0.2, -0.4);
        let m = Mesh::from_arrays(&hex, &[&[0, 1, 2, 3, 4, 5]]).unwrap();
        let m = m
            .with_vertices(m.vertices().iter().map(|p| r * p).collect())
            .unwrap();
        assert!(planarity_report(&m).unwrap().max <= 1e-12);
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let m = Mesh::from_arrays(
            &[
                [0., 0., 0.],
                [1., 0., 0.],
                [2., 0., 0.],
                [3., 0., 0.],
                [0., 1., 0.],
            ],
            &[&[0, 1, 2, 3]],
        )
        .unwrap();
        assert!(matches!(
            face_plane(&m, 0),
            Err(PmError::DegenerateFace { face: 0 })
        ));
    }
}
