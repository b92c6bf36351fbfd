//! Error type shared by all solver and diagnostic modules.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid problem parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("grid resolution too low: need at least {needed} nodes, got {got}")]
    Resolution { needed: usize, got: usize },

    #[error("field/grid/parameter mismatch: {reason}")]
    Mismatch { reason: String },

    #[error("operation outside its domain: {reason}")]
    Domain { reason: String },

    #[error("singular functional: h1c_sq = {value} is not positive")]
    SingularFunctional { value: f64 },

    #[error("no bisection bracket found in amplitude range [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solve failed: {reason}")]
    LinearSolve { reason: String },

    #[error("time step {dt:.3e} violates the stability rule dt <= {limit:.3e}")]
    UnstableTimestep { dt: f64, limit: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("not applicable: {reason}")]
    NotApplicable { reason: String },

    #[error("regrid out of range: requested r = {r:.6e} beyond source domain r_max = {r_max:.6e}")]
    Regrid { r: f64, r_max: f64 },

    #[error("sequence generation failed: {reason}")]
    Generation { reason: String },

    #[error("extraction stagnated: eta went from {eta_prev:.6e} to {eta:.6e}")]
    Stagnation { eta_prev: f64, eta: f64 },

    #[error("precondition violated: {reason}")]
    Precondition { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
