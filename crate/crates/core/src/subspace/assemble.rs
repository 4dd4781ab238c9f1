use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::cases::{CaseAssignment, FaceCase};
use super::face::{build_face_constraints, ConstraintDerivation};
use crate::error::{PmError, Result};
use crate::mesh::{planarity_error, Mesh};

/// Faces whose planarity error exceeds this are rejected by [`assemble`].
pub const DEFAULT_PLANARITY_TOL: f64 = 1e-6;

/// Where a face's rows live in the global matrix.
#[derive(Debug, Clone)]
pub struct FaceProvenance {
    pub face: usize,
    pub requested: FaceCase,
    pub case: FaceCase,
    pub fell_back: bool,
    /// Row ranges (three of them, one per axis, in the decoupled layout).
    pub rows: Vec<Range<usize>>,
    /// Largest singular value of the face's raw rows.
    pub scaling: f64,
}

/// Global sparse constraint matrix `B` with provenance.
///
/// Columns follow the vectorized layout `[x_1..x_n, y_1..y_n, z_1..z_n]`.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    source: Mesh,
    assignment: CaseAssignment,
    b: CsrMatrix<f64>,
    axis_block: Option<CsrMatrix<f64>>,
    faces: Vec<FaceProvenance>,
    row_face: Vec<usize>,
    derivations: BTreeMap<usize, ConstraintDerivation>,
}

#[derive(Debug, Clone, Copy)]
pub struct AssembleOptions {
    pub planarity_tol: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            planarity_tol: DEFAULT_PLANARITY_TOL,
        }
    }
}

pub fn assemble(mesh: &Mesh, assignment: &CaseAssignment) -> Result<ConstraintMatrix> {
    assemble_with(mesh, assignment, AssembleOptions::default())
}

pub fn assemble_with(
    mesh: &Mesh,
    assignment: &CaseAssignment,
    options: AssembleOptions,
) -> Result<ConstraintMatrix> {
    let n = mesh.num_vertices();
    let nf = mesh.num_faces();
    if let Some((&f, _)) = assignment.faces.range(nf..).next() {
        return Err(PmError::InvalidArgument(format!(
            "case assigned to face {f}, mesh has {nf} faces"
        )));
    }
    let mut bad = Vec::new();
    for f in 0..nf {
        if planarity_error(mesh, f)? > options.planarity_tol {
            bad.push(f);
        }
    }
    if !bad.is_empty() {
        return Err(PmError::NonPlanar {
            faces: bad,
            tol: options.planarity_tol,
        });
    }

    let mut blocks = Vec::with_capacity(nf);
    for f in 0..nf {
        let requested = assignment.case(f);
        blocks.push((
            requested,
            build_face_constraints(f, &mesh.face_points(f), &requested)?,
        ));
    }
    let decoupled = blocks
        .iter()
        .all(|(_, b)| b.rows.nrows() == 0 || b.case == FaceCase::Affine);

    let mut faces = Vec::with_capacity(nf);
    let mut derivations = BTreeMap::new();
    let (b, axis_block, row_face);
    if decoupled {
        let per_axis: usize = blocks.iter().map(|(_, b)| axis_rows(b).nrows()).sum();
        let mut axis = CooMatrix::new(per_axis, n);
        let mut full = CooMatrix::new(3 * per_axis, 3 * n);
        let mut owner = vec![0; 3 * per_axis];
        let mut r0 = 0;
        for (f, (requested, block)) in blocks.into_iter().enumerate() {
            let rows = axis_rows(&block);
            let face = mesh.face(f);
            for r in 0..rows.nrows() {
                for (i, &v) in face.iter().enumerate() {
                    let c = rows[(r, i)];
                    if c != 0.0 {
                        axis.push(r0 + r, v, c);
                        for a in 0..3 {
                            full.push(a * per_axis + r0 + r, a * n + v, c);
                        }
                    }
                }
                for a in 0..3 {
                    owner[a * per_axis + r0 + r] = f;
                }
            }
            let len = rows.nrows();
            faces.push(FaceProvenance {
                face: f,
                requested,
                case: block.case,
                fell_back: block.fell_back,
                rows: (0..3)
                    .map(|a| a * per_axis + r0..a * per_axis + r0 + len)
                    .collect(),
                scaling: block.scaling,
            });
            r0 += len;
        }
        b = CsrMatrix::from(&full);
        axis_block = Some(CsrMatrix::from(&axis));
        row_face = owner;
    } else {
        let total: usize = blocks.iter().map(|(_, b)| b.rows.nrows()).sum();
        let mut full = CooMatrix::new(total, 3 * n);
        let mut owner = Vec::with_capacity(total);
        let mut r0 = 0;
        for (f, (requested, block)) in blocks.into_iter().enumerate() {
            let face = mesh.face(f);
            let k = face.len();
            for r in 0..block.rows.nrows() {
                for a in 0..3 {
                    for (i, &v) in face.iter().enumerate() {
                        let c = block.rows[(r, a * k + i)];
                        if c != 0.0 {
                            full.push(r0 + r, a * n + v, c);
                        }
                    }
                }
                owner.push(f);
            }
            let len = block.rows.nrows();
            faces.push(FaceProvenance {
                face: f,
                requested,
                case: block.case,
                fell_back: block.fell_back,
                rows: vec![r0..r0 + len],
                scaling: block.scaling,
            });
            if let Some(d) = block.derivation {
                derivations.insert(f, d);
            }
            r0 += len;
        }
        b = CsrMatrix::from(&full);
        axis_block = None;
        row_face = owner;
    }
    Ok(ConstraintMatrix {
        source: mesh.clone(),
        assignment: assignment.clone(),
        b,
        axis_block,
        faces,
        row_face,
        derivations,
    })
}

fn axis_rows(block: &super::face::FaceBlock) -> nalgebra::DMatrix<f64> {
    block
        .axis_rows
        .clone()
        .unwrap_or_else(|| nalgebra::DMatrix::zeros(0, block.rows.ncols() / 3))
}

impl ConstraintMatrix {
    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.b
    }

    pub fn source(&self) -> &Mesh {
        &self.source
    }

    pub fn assignment(&self) -> &CaseAssignment {
        &self.assignment
    }

    pub fn nrows(&self) -> usize {
        self.b.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.b.ncols()
    }

    /// True when `B` is three identical per-axis blocks.
    pub fn decoupled(&self) -> bool {
        self.axis_block.is_some()
    }

    /// The per-axis block (rows x n_v) in the decoupled case.
    pub fn axis_block(&self) -> Option<&CsrMatrix<f64>> {
        self.axis_block.as_ref()
    }

    pub fn provenance(&self) -> &[FaceProvenance] {
        &self.faces
    }

    /// Face owning a row.
    pub fn face_of_row(&self, row: usize) -> usize {
        self.row_face[row]
    }

    /// Prescribed-normal intermediates, by face.
    pub fn derivations(&self) -> &BTreeMap<usize, ConstraintDerivation> {
        &self.derivations
    }

    /// Per-face row scaling constants.
    pub fn row_scaling(&self) -> Vec<f64> {
        self.faces.iter().map(|p| p.scaling).collect()
    }

    /// Faces whose prescribed normal was replaced by `Parallel`.
    pub fn fallback_faces(&self) -> Vec<usize> {
        self.faces
            .iter()
            .filter(|p| p.fell_back)
            .map(|p| p.face)
            .collect()
    }

    /// `L_B = B^T B`.
    pub fn gram(&self) -> CsrMatrix<f64> {
        &self.b.transpose() * &self.b
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.b.nrows());
        for (r, row) in self.b.row_iter().enumerate() {
            out[r] = row
                .col_indices()
                .iter()
                .zip(row.values())
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
        out
    }

    /// Per-face norm of `B_f x`.
    pub fn face_residuals(&self, x: &DVector<f64>) -> Vec<f64> {
        let bx = self.apply(x);
        self.faces
            .iter()
            .map(|p| {
                p.rows
                    .iter()
                    .flat_map(|r| r.clone())
                    .map(|i| bx[i] * bx[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.b.nrows(), self.b.ncols());
        for (r, row) in self.b.row_iter().enumerate() {
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                d[(r, c)] += v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn cube_affine_is_decoupled() {
        let m = corpus::cube();
        let c = assemble(&m, &CaseAssignment::affine()).unwrap();
        assert!(c.decoupled());
        assert_eq!(c.nrows(), 18);
        assert_eq!(c.axis_block().unwrap().nrows(), 6);
        assert!(c.apply(&m.to_vec()).norm() < 1e-12);
    }

    #[test]
    fn vertical_case_is_not_decoupled() {
        let m = corpus::wavy_grid(3, 3);
        let c = assemble(&m, &CaseAssignment::vertical()).unwrap();
        assert!(!c.decoupled());
        assert_eq!(c.nrows(), 9 * 4);
        assert_eq!(c.derivations().len(), 9);
    }

    #[test]
    fn provenance_covers_rows() {
        let m = corpus::cube();
        let mut a = CaseAssignment::affine();
        a.set(2, FaceCase::Parallel).set(3, FaceCase::vertical());
        let c = assemble(&m, &a).unwrap();
        let mut seen = vec![false; c.nrows()];
        for p in c.provenance() {
            for r in p.rows.iter().flat_map(|r| r.clone()) {
                assert_eq!(c.face_of_row(r), p.face);
                seen[r] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        // Top/bottom faces are horizontal: vertical prescription is fine; side face 3
        // has a horizontal normal and so it is a genuine prescribed-normal block.
        assert!(c.fallback_faces().is_empty());
    }

    #[test]
    fn nonplanar_faces_are_listed() {
        let m = corpus::jitter(&corpus::cube(), 0.05, 3);
        match assemble(&m, &CaseAssignment::affine()) {
            Err(PmError::NonPlanar { faces, .. }) => assert!(!faces.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_range_assignment() {
        let mut a = CaseAssignment::affine();
        a.set(99, FaceCase::Parallel);
        assert!(assemble(&corpus::cube(), &a).is_err());
    }
}
