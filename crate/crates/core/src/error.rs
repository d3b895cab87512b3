use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// `s + beta * c2 <= 0` (or a nonpositive Gaussian precision).
    #[error("precision violation: {0}")]
    PrecisionViolation(String),

    /// Effective temporary impact `eta_tilde <= 0` in Model 2.
    #[error("eta_tilde must be positive, got {0}")]
    EtaTildeViolation(f64),

    /// Time argument outside `[0, T]`.
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    /// Discretized density grid does not cover enough standard deviations.
    #[error("density support too narrow: {0}")]
    SupportTooNarrow(String),

    /// All unnormalized Gibbs weights underflowed to zero.
    #[error("degenerate normalizer in Gibbs posterior")]
    DegenerateNormalizer,

    /// Riccati solution exceeded the blow-up threshold before reaching t = 0.
    #[error("Riccati solution blew up at t = {t} (|H2| = {h2})")]
    BlowUp { t: f64, h2: f64 },

    /// Strategy does not match the configured model.
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    /// A simulated state became NaN or infinite.
    #[error("nonfinite state on path {path} at step {step}")]
    NonfiniteState { path: usize, step: usize },

    /// Path was stored without its Brownian increments.
    #[error("path stored without noise increments")]
    IncrementsMissing,

    /// Model 2 value function requested without an H0 curve.
    #[error("H0 curve unavailable for this model/run")]
    H0Unavailable,

    /// Saddle search optimizer escaped the grid after repeated widening.
    #[error("optimizer on grid boundary after {0} widenings")]
    BoundaryHit(usize),

    /// Hamiltonian is not concave in v (Model 2 with eta <= R_vv/2).
    #[error("Hamiltonian not concave in v (eta - R_vv/2 = {0})")]
    NonConcave(f64),

    /// Configuration failed validation.
    #[error("invalid config: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
