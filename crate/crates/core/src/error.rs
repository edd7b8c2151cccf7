use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 3 nodes per axis, got nx = {nx}, ny = {ny}")]
    DimensionTooSmall { nx: usize, ny: usize },
    #[error("domain extent must be positive, got {width} x {height}")]
    NonpositiveExtent { width: f64, height: f64 },
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("matrix is singular (zero pivot at column {column})")]
    SingularMatrix { column: usize },
    #[error("linear solve did not reach tolerance {tol:e}; best relative residual {best_residual:e}")]
    NonConvergence { best_residual: f64, tol: f64 },
    #[error("medium invariant violated: {0}")]
    InvalidMedium(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("harmonic u_{0} is not available")]
    MissingHarmonic(usize),
    #[error("Picard iteration failed to converge at step {step} (increment {increment:e})")]
    PicardNonConvergence { step: usize, increment: f64 },
    #[error("need at least {needed} time samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("cascade diverged for source {source_index} (empirical r = {empirical_r:.3})")]
    CascadeDivergence { source_index: usize, empirical_r: f64 },
    #[error("least-squares system is underdetermined: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("line search failed after {0} halvings")]
    LineSearchFailure(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
