use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum CwlmError {
    #[error("non-finite parameter: {0}")]
    NonFiniteParameter(String),

    #[error("state vector is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("states are not orthogonal (overlap = {0})")]
    NotOrthogonal(f64),

    #[error("probability out of range: {0}")]
    ProbabilityOutOfRange(f64),

    #[error("matrix exponential did not converge: {0}")]
    ExpmFailure(String),

    #[error("generator kernel is degenerate (second singular value {0:e})")]
    DegenerateKernel(f64),

    #[error("post-selector has zero overlap with the chi=0 evolved state (trace = {0:e}); add regularizing dynamics")]
    ZeroOverlapDenominator(f64),

    #[error("characteristic function tail {0:e} exceeds decay threshold at the grid edge; enlarge chi_max")]
    InsufficientDecay(f64),

    #[error("cumulant stencil ill-conditioned: order {order}, relative error estimate {rel_err:e}")]
    IllConditionedStencil { order: usize, rel_err: f64 },

    #[error("distribution grids do not match")]
    GridMismatch,

    #[error("shift-model fit residual {0} exceeds 20%")]
    PoorFit(f64),

    #[error("initial state strictly orthogonal to post-selected state; use the regularized form")]
    ZeroOverlap,

    #[error("nonzero overlap between initial and post-selected state where zero overlap is required (overlap = {0:e})")]
    NonzeroOverlap(f64),

    #[error("detector quality K = {0} < 1 violates the quantum limit")]
    InvalidK(f64),

    #[error("trajectory state left the physical domain (violation = {0:e}); reduce dt")]
    StateBlowup(f64),

    #[error("conditioned ensemble is empty")]
    EmptyEnsemble,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("physics validation failed: {0}")]
    ValidationFailed(String),
}

pub type Result<T> = std::result::Result<T, CwlmError>;
