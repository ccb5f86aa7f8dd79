//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by mesh construction, assembly, solvers and deformation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("singular metric on {degree}-simplex {simplex}")]
    SingularMetric { degree: usize, simplex: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver error after {iterations} iterations: {message}")]
    Solver { iterations: usize, message: String },

    #[error("not near Legendrian: simplex {simplex} has |*psi| = {modulus:.3e}")]
    NotNearLegendrian { simplex: usize, modulus: f64 },

    #[error("degenerate normal frame at vertex {vertex}")]
    Frame { vertex: usize },

    #[error("step size error: {0}")]
    StepSize(String),

    #[error("divergence after {} iterations (residuals {log:?})", log.len())]
    Divergence { log: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::SingularMetric { .. } => "singular_metric",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Parameter(_) => "parameter",
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::Assembly(_) => "assembly",
            Error::Solver { .. } => "solver",
            Error::NotNearLegendrian { .. } => "not_near_legendrian",
            Error::Frame { .. } => "frame",
            Error::StepSize(_) => "step_size",
            Error::Divergence { .. } => "divergence",
            Error::Io(_) => "io",
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Parameter(_) | Error::Validation(_) | Error::InvalidMesh(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
