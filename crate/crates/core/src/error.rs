use thiserror::Error;

/// Errors raised by the estimation, geometry and I/O routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("degenerate-support: density mass concentrated at a single grid point")]
    DegenerateSupport,

    #[error("support-mismatch: grid [{grid_lo}, {grid_hi}] does not cover [{needed_lo}, {needed_hi}]")]
    SupportMismatch {
        needed_lo: f64,
        needed_hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("degenerate-sample: sample variance is zero")]
    DegenerateSample,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid quantile function: {0}")]
    InvalidQuantile(String),

    #[error("empty series")]
    EmptySeries,

    #[error("zero-variance: series has no Wasserstein variability")]
    ZeroVariance,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular-autocovariance: Yule-Walker system is singular")]
    SingularAutocovariance,

    #[error("insufficient-residuals: need at least 3 residual curves, got {0}")]
    InsufficientResiduals(usize),

    #[error("non-causal: autoregressive polynomial has a root in the closed unit disk")]
    NonCausal,

    #[error("psi-truncation: psi weights do not decay within {0} terms")]
    PsiTruncation(usize),

    #[error("incompatible innovations: derivative bound {bound} exceeds limit {limit}")]
    Incompatible { bound: f64, limit: f64 },

    #[error("forecast-degenerate at step {step}")]
    ForecastDegenerate { step: usize },

    #[error("singular-design: score regression design matrix is singular")]
    SingularDesign,

    #[error("no feasible candidate: every tuning cell failed")]
    NoFeasibleCandidate,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl WarError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            WarError::InvalidGrid(_) => "invalid-grid",
            WarError::LengthMismatch { .. } => "length-mismatch",
            WarError::GridMismatch => "grid-mismatch",
            WarError::DegenerateSupport => "degenerate-support",
            WarError::SupportMismatch { .. } => "support-mismatch",
            WarError::DegenerateSample => "degenerate-sample",
            WarError::InvalidDensity(_) => "invalid-density",
            WarError::InvalidQuantile(_) => "invalid-quantile",
            WarError::EmptySeries => "empty-series",
            WarError::ZeroVariance => "zero-variance",
            WarError::InsufficientData(_) => "insufficient-data",
            WarError::SingularAutocovariance => "singular-autocovariance",
            WarError::InsufficientResiduals(_) => "insufficient-residuals",
            WarError::NonCausal => "non-causal",
            WarError::PsiTruncation(_) => "psi-truncation",
            WarError::Incompatible { .. } => "incompatible-innovations",
            WarError::ForecastDegenerate { .. } => "forecast-degenerate",
            WarError::SingularDesign => "singular-design",
            WarError::NoFeasibleCandidate => "no-feasible-candidate",
            WarError::InvalidArgument(_) => "invalid-argument",
            WarError::Parse(_) => "parse-error",
            WarError::Io(_) => "io-error",
        }
    }

    /// True for failures of the numerical procedures themselves, as opposed
    /// to malformed input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            WarError::ZeroVariance
                | WarError::SingularAutocovariance
                | WarError::InsufficientResiduals(_)
                | WarError::NonCausal
                | WarError::PsiTruncation(_)
                | WarError::ForecastDegenerate { .. }
                | WarError::SingularDesign
                | WarError::NoFeasibleCandidate
        )
    }
}

impl From<std::io::Error> for WarError {
    fn from(e: std::io::Error) -> Self {
        WarError::Io(e.to_string())
    }
}

impl From<csv::Error> for WarError {
    fn from(e: csv::Error) -> Self {
        WarError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for WarError {
    fn from(e: serde_json::Error) -> Self {
        WarError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WarError>;
