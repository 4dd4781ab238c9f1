use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Laplacian, LaplacianKind, Shape, ShapeLabel};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::subspace::SubspaceBasis;

/// Eigenpairs of the Laplacian restricted to the subspace, ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub shapes: Vec<Shape>,
    pub laplacian: LaplacianKind,
    /// Set when fewer shapes than requested were available.
    pub truncated: bool,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    frequencies: &'a [f64],
    shapes: &'a str,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Shapes as the columns of a 3n x count matrix.
    pub fn shape_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.shapes.iter().map(|s| s.displacement.clone()).collect();
        if cols.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        DMatrix::from_columns(&cols)
    }

    /// `{"frequencies": [...], "shapes": <reference>}`.
    pub fn to_json(&self, shapes_ref: &str) -> String {
        serde_json::to_string(&SpectrumJson {
            frequencies: &self.frequencies,
            shapes: shapes_ref,
        })
        .expect("serializable")
    }
}

/// The `count` lowest eigenshapes (all of them for `None`).
pub fn eigenshapes(basis: &SubspaceBasis, l: &Laplacian, count: Option<usize>) -> Spectrum {
    let d = basis.ndof();
    let want = count.unwrap_or(d);
    let truncated = want > d;
    if truncated {
        log::warn!("requested {want} eigenshapes, subspace has {d}");
    }
    let q = basis.q();
    let lq = l.apply_columns(q);
    let mut m = q.tr_mul(&lq);
    m = (&m + m.transpose()) * 0.5;
    let (values, vectors) = crate::linalg::sym_eigen(&m);
    let count = want.min(d);
    let mut frequencies = Vec::with_capacity(count);
    let mut shapes = Vec::with_capacity(count);
    for k in 0..count {
        frequencies.push(values[k]);
        let w = vectors.column(k).into_owned();
        shapes.push(Shape::new(basis, q * w, ShapeLabel::Eigenshape(k)));
    }
    Spectrum {
        frequencies,
        shapes,
        laplacian: l.kind,
        truncated,
    }
}

/// Sum of the shapes with `low <= frequency <= high`, scaled by `gain`.
pub fn bandpass_displacement(spectrum: &Spectrum, low: f64, high: f64, gain: f64) -> DVector<f64> {
    let n = spectrum.shapes.first().map_or(0, |s| s.displacement.len());
    let mut out = DVector::zeros(n);
    let mut used = 0;
    for (f, s) in spectrum.frequencies.iter().zip(&spectrum.shapes) {
        if *f >= low && *f <= high {
            out += &s.displacement * gain;
            used += 1;
        }
    }
    if used == 0 {
        log::info!("band [{low}, {high}] contains no eigenshapes");
    }
    out
}

/// `source + gain * sum of in-band eigenshapes`.
pub fn bandpass_apply(
    source: &Mesh,
    spectrum: &Spectrum,
    low: f64,
    high: f64,
    gain: f64,
) -> Result<Mesh> {
    if !(low >= 0.0 && low <= high) {
        return Err(crate::PmError::InvalidArgument(format!(
            "band needs 0 <= low <= high, got [{low}, {high}]"
        )));
    }
    source.displaced(&bandpass_displacement(spectrum, low, high, gain))
}
