use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("mixture weights sum to {0}, expected 1")]
    WeightSumMismatch(f64),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("no closed-form entropy for {0} densities")]
    NoClosedForm(&'static str),
    #[error("unknown activation kind `{0}`")]
    UnknownKind(String),
    #[error("function is not strictly increasing on the domain (derivative {derivative} at x = {at})")]
    NonMonotone { at: f64, derivative: f64 },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("adaptive quadrature did not converge on [{lo}, {hi}] within depth {depth}")]
    QuadratureNonConvergence { lo: f64, hi: f64, depth: u32 },
    #[error("non-positive derivative {derivative} at sample {at}")]
    ZeroDerivativeSample { at: f64, derivative: f64 },
    #[error("bad spacing window m = {m} for n = {n}")]
    BadWindow { m: usize, n: usize },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("target {target} outside range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("|epsilon| must be below 1 for an invertible branch, got {0}")]
    EpsilonTooLarge(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered: {0}")]
    NonFiniteValue(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from malformed input rather than a numerical
    /// or domain condition.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::UnknownKind(_) | Error::InvalidConfig(_) | Error::Parse(_) | Error::Io(_))
    }
}
