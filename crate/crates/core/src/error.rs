use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("line {line}: timestamp is not strictly increasing")]
    NonIncreasingTimestamp { line: u64 },

    #[error("line {line}: timestamp goes backwards")]
    DecreasingTimestamp { line: u64 },

    #[error("line {line}: non-positive price {price}")]
    NonPositivePrice { line: u64, price: f64 },

    #[error("unexpected CSV header {found:?}, expected {expected:?}")]
    BadHeader { found: String, expected: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no estimable buckets ({skipped} buckets had fewer than 2 returns)")]
    NoEstimableBuckets { skipped: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),

    #[error("non-finite state at integration step {step}")]
    NonFiniteState { step: usize },

    #[error("stationarity violated: sum of alpha and beta is {persistence}, must be < 1")]
    Stationarity { persistence: f64 },

    #[error("component index {index} out of range for window length {window_length}")]
    ComponentOutOfRange { index: usize, window_length: usize },

    #[error("degenerate geometry: all embedded points coincide")]
    DegenerateGeometry,

    #[error("no admissible neighbour pairs")]
    NoNeighbourPairs,

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("optimizer failed after {iterations} iterations (last objective {last_value})")]
    OptimizerFailure { iterations: usize, last_value: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI exit report.
    pub fn id(&self) -> &'static str {
        match self {
            Error::MalformedRow { .. } => "malformed-row",
            Error::NonIncreasingTimestamp { .. } => "non-increasing-timestamp",
            Error::DecreasingTimestamp { .. } => "decreasing-timestamp",
            Error::NonPositivePrice { .. } => "non-positive-price",
            Error::BadHeader { .. } => "bad-header",
            Error::EmptyInput(_) => "empty-input",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::NoEstimableBuckets { .. } => "no-estimable-buckets",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NonFiniteInput(_) => "non-finite-input",
            Error::NonFiniteState { .. } => "non-finite-state",
            Error::Stationarity { .. } => "stationarity-violation",
            Error::ComponentOutOfRange { .. } => "component-out-of-range",
            Error::DegenerateGeometry => "degenerate-geometry",
            Error::NoNeighbourPairs => "no-neighbour-pairs",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::OptimizerFailure { .. } => "optimizer-failure",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
