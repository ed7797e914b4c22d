use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not a unit vector (|x| = {norm})")]
    NotUnit { norm: f64 },

    #[error("point lies below the upper half-sphere (last coordinate {last})")]
    BelowEquator { last: f64 },

    #[error("vector is not tangent at its base point (<v, x> = {inner})")]
    NotTangent { inner: f64 },

    #[error("expected a boundary point, last coordinate is {last}")]
    NotOnBoundary { last: f64 },

    #[error("expected an interior point, got a boundary point")]
    OnBoundary,

    #[error("tangent vector of length {norm} is outside the normal chart (must be < pi)")]
    OutOfChart { norm: f64 },

    #[error("cluster barycenter undefined: Euclidean mean has norm {norm}")]
    DegenerateBarycenter { norm: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid curvature field: {0}")]
    InvalidField(String),

    #[error("quadrature did not reach tolerance {tol}: value {value}, error estimate {error}")]
    QuadratureNotConverged { value: f64, error: f64, tol: f64 },

    #[error("dimensional constant {name} = {value} is not positive")]
    NonPositiveConstant { name: &'static str, value: f64 },

    #[error("coincident vortices: minimal separation {separation}")]
    CoincidentPoints { separation: f64 },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
