use thiserror::Error;

/// Errors raised by the laboratory's numerical operations and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("negative density {value} at index {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("non-integrable kernel: {0}")]
    NonIntegrable(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("alignment regimes are undefined for k = {0}; they require k > 0 (use the EA check for k = 0)")]
    RegimeUndefined(f64),
    #[error("branch factor diverges: imaginary magnitude {0} >= 1")]
    BranchDivergence(f64),
    #[error("strict hyperbolicity degenerates on the integration path near u = {0}")]
    HyperbolicityDegenerate(f64),
    #[error("requested time {t} lies past blowup (q(t) = {q})")]
    PastBlowup { t: f64, q: f64 },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("CFL violation: dt = {dt} exceeds the stable limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("Poisson source has nonzero mean {0}")]
    NonzeroMean(f64),
    #[error("mass weights sum to {actual}, expected background {expected}")]
    MassMismatch { expected: f64, actual: f64 },
    #[error("line window too small: perturbation needs half-width {required}, domain has {available}")]
    WindowTooSmall { required: f64, available: f64 },
    #[error("too few snapshots for classification: {0} (need at least 3)")]
    TooFewSnapshots(usize),
    #[error("blowup fit window is not monotone increasing")]
    NonMonotone,
    #[error("bound not applicable: {0}")]
    BoundNotApplicable(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors caused by the configuration or input data rather than by a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::InvalidKernel(_)
                | Error::NonIntegrable(_)
                | Error::NegativeDensity { .. }
                | Error::WindowTooSmall { .. }
                | Error::DomainMismatch(_)
        )
    }
}
