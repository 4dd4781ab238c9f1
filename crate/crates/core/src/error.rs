use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PmError> = std::result::Result<T, E>;

/// Errors raised by mesh handling and subspace computations.
#[derive(Debug, Error)]
pub enum PmError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),

    #[error("degenerate face {face}")]
    DegenerateFace { face: usize },

    #[error("faces not planar within tolerance {tol:e}: {faces:?}")]
    NonPlanar { faces: Vec<usize>, tol: f64 },

    #[error("unsupported topology: {0}")]
    Topology(String),

    #[error("infeasible constraints, least-squares residual {residual:e}")]
    Infeasible { residual: f64 },

    #[error(
        "no sparse shape within tolerance, best residual {best_residual:e} with support {support}"
    )]
    SparseInfeasible { best_residual: f64, support: usize },

    #[error("polarity center lies on the planes of faces {faces:?}")]
    PlaneThroughCenter { faces: Vec<usize> },

    #[error("dual inconsistent at primal vertices {vertices:?} (residuals {residuals:?})")]
    InconsistentDual {
        vertices: Vec<usize>,
        residuals: Vec<f64>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PmError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code used in service error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            PmError::Io { .. } => "io",
            PmError::Parse { .. } => "parse",
            PmError::InvalidMesh(_) => "invalid_mesh",
            PmError::NonManifoldEdge(..) => "non_manifold_edge",
            PmError::DegenerateFace { .. } => "degenerate_face",
            PmError::NonPlanar { .. } => "non_planar",
            PmError::Topology(_) => "topology",
            PmError::Infeasible { .. } => "infeasible",
            PmError::SparseInfeasible { .. } => "sparse_infeasible",
            PmError::PlaneThroughCenter { .. } => "plane_through_center",
            PmError::InconsistentDual { .. } => "inconsistent_dual",
            PmError::InvalidArgument(_) => "invalid_argument",
            PmError::Json(_) => "json",
        }
    }

    /// Face ids implicated by the error, if any.
    pub fn faces(&self) -> Vec<usize> {
        match self {
            PmError::DegenerateFace { face } => vec![*face],
            PmError::NonPlanar { faces, .. } | PmError::PlaneThroughCenter { faces } => {
                faces.clone()
            }
            _ => Vec::new(),
        }
    }

    /// Vertex ids implicated by the error, if any.
    pub fn vertices(&self) -> Vec<usize> {
        match self {
            PmError::InconsistentDual { vertices, .. } => vertices.clone(),
            PmError::NonManifoldEdge(a, b) => vec![*a, *b],
            _ => Vec::new(),
        }
    }
}
