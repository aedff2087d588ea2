use thiserror::Error;

use crate::complex::VertexId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("no value for vertex {0}")]
    MissingValue(VertexId),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("solver did not converge: relative residual {residual:e} exceeds {tolerance:e}")]
    SolverDivergence { residual: f64, tolerance: f64 },

    #[error("vertex {0} is not on the boundary")]
    NotBoundary(VertexId),

    #[error("ill-formed vertex subset: {0}")]
    BadSubset(String),

    #[error("boundary flux does not balance: total {total:e} exceeds {tolerance:e}")]
    ConsistencyViolation { total: f64, tolerance: f64 },

    #[error("degenerate level {level}: {reason}")]
    DegenerateLevel { level: f64, reason: String },

    #[error("equal values on adjacent vertices: {}", format_pairs(.0))]
    Tie(Vec<(VertexId, VertexId)>),

    #[error("index total {total} does not match expected {expected}")]
    IndexMismatch { total: String, expected: String },

    #[error("flux length undefined on this side: {0}")]
    SideUndefined(String),

    #[error("component {component} could not be classified: {reason}")]
    UnclassifiableComponent { component: usize, reason: String },

    #[error("gluing mismatch along seam {seam}: {length_a} vs {length_b}")]
    GluingMismatch {
        seam: usize,
        length_a: f64,
        length_b: f64,
    },

    #[error("coverage gap in component {component}: {samples} uncovered samples near ({x}, {y})")]
    CoverageGap {
        component: usize,
        samples: usize,
        x: f64,
        y: f64,
    },

    #[error(
        "overlap in component {component}: {samples} multiply covered samples near ({x}, {y})"
    )]
    OverlapDetected {
        component: usize,
        samples: usize,
        x: f64,
        y: f64,
    },

    #[error("marker placement inconsistent: {0}")]
    MarkerInconsistency(String),

    #[error("point ({0}, {1}) is outside the complex")]
    OutsideComplex(f64, f64),

    #[error("verification failed: {}", .0.join(", "))]
    VerificationFailed(Vec<String>),

    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_pairs(pairs: &[(VertexId, VertexId)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::UnknownVertex(_)
            | Error::MissingValue(_)
            | Error::NotBoundary(_)
            | Error::BadSubset(_)
            | Error::UnknownFixture(_)
            | Error::OutsideComplex(..)
            | Error::Io(_) => 2,
            Error::SingularSystem(_)
            | Error::SolverDivergence { .. }
            | Error::ConsistencyViolation { .. } => 3,
            Error::Tie(_)
            | Error::IndexMismatch { .. }
            | Error::DegenerateLevel { .. }
            | Error::SideUndefined(_) => 4,
            Error::UnclassifiableComponent { .. }
            | Error::GluingMismatch { .. }
            | Error::CoverageGap { .. }
            | Error::OverlapDetected { .. }
            | Error::MarkerInconsistency(_)
            | Error::VerificationFailed(_) => 5,
        }
    }
}
