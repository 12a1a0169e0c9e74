use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid metric at grid point {index}: {reason}")]
    InvalidMetric { index: usize, reason: String },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("point is off the target (constraint residual {residual:e})")]
    OffTarget { residual: f64 },
    #[error("vector is not tangent (residual {residual:e})")]
    NotTangent { residual: f64 },
    #[error("points lie in each other's cut locus (distance {distance})")]
    CutLocus { distance: f64 },
    #[error("invalid equivariance data: {0}")]
    InvalidEquivariance(String),
    #[error("grid too coarse for the map at point {index}: {reason}")]
    ResolutionTooCoarse { index: usize, reason: String },
    #[error("domain is not complex: {0}")]
    NotComplex(String),
    #[error("solver failed after {iterations} iterations (residual {residual:e}): {what}")]
    SolverFailure {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("step rejected: dt = {dt:e} exceeds the stability bound {bound:e}")]
    StepRejected { dt: f64, bound: f64 },
    #[error("flow diverged: {0}")]
    Diverged(String),
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("homotopy undefined at point {index}: {reason}")]
    HomotopyUndefined { index: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not in p^c: projection residual {residual:e}")]
    NotInP { residual: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
