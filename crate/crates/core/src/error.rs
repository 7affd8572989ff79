use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("metric is not positive definite at point {index} (smallest eigenvalue {min_eigenvalue:e})")]
    Degenerate { index: usize, min_eigenvalue: f64 },
    #[error("input is not pluriclosed: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotPluriclosed { residual: f64, tolerance: f64 },
    #[error("singularity at t = {time}: {reason}")]
    Singularity { time: f64, reason: String },
    #[error("step size underflow at t = {time} (h = {step:e}); system looks stiff")]
    Stiff { time: f64, step: f64 },
    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("not an Inoue matrix: {0}")]
    NotInoue(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("type change: |p| reached {p_max} on the deformation support")]
    TypeChange { p_max: f64 },
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
