use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("component {index} has no closed-form transform")]
    UnsupportedComponent { index: usize },

    #[error("quadrature under-resolved: {0}")]
    QuadratureUnderResolved(String),

    #[error("evaluation point |x| = {norm} lies inside the support radius {radius}")]
    EvaluationInsideSupport { norm: f64, radius: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("noise level {0} is not below 1/e")]
    EpsTooLarge(f64),

    #[error("fitted alpha = {alpha} is outside (0, 1)")]
    FitOutOfRange { alpha: f64 },

    #[error("bound fit needs at least 5 records spanning 2 decades of eps: {0}")]
    InsufficientRecords(String),

    #[error("samples too sparse: {0}")]
    UnderSampled(String),

    #[error("sample sup {sup} exceeds the a-priori bound {bound}")]
    BoundViolated { sup: f64, bound: f64 },

    #[error("best overlap of the data interval with the cell grid is empty")]
    DegenerateOverlap,

    #[error("spectral samples do not cover the inversion ball: {0}")]
    InsufficientCoverage(String),

    #[error("solver stalled after {iterations} iterations (relative residual {residual:e})")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
