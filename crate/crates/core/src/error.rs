use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter {value} lies outside segment [{lo}, {hi}]")]
    OutOfSegment { value: f64, lo: f64, hi: f64 },

    #[error("kernel diagonal requested at a corner (t = {t}) where |x'| vanishes")]
    SingularDiagonal { t: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mesh node {index} coincides with the corner at t = {t}")]
    NodeOnCorner { index: usize, t: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("regularization wavenumber {0} has no imaginary part; the branch of sqrt(m^2 - kappa^2) is ambiguous")]
    RealKappa(String),

    #[error("operator `{0}` is required by the formulation but was not assembled")]
    MissingOperator(&'static str),

    #[error("evaluation point is within {distance:e} of the boundary")]
    NearBoundary { distance: f64 },

    #[error("direction sets differ")]
    DirectionMismatch,

    /// `line` is 0 when the problem is not tied to one line of the file.
    #[error("{}", config_message(*line, message))]
    Config { line: usize, message: String },

    #[error("GMRES did not reach tolerance {tol:e} in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_message(line: usize, message: &str) -> String {
    if line == 0 {
        message.to_string()
    } else {
        format!("line {line}: {message}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
