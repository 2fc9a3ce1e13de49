use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Row, column, period and time indices carried by variants are 1-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("period must be at least 1")]
    ZeroPeriod,

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("horizon {horizon} is shorter than period {period}")]
    HorizonShorterThanPeriod { horizon: usize, period: usize },

    #[error("all realizations are identical in period {period}")]
    DegenerateBlock { period: usize },

    #[error("need at least 2 realizations, got {got}")]
    TooFewRealizations { got: usize },

    #[error("invalid thresholds: accept_max={accept_max}, reject_median={reject_median}")]
    InvalidThresholds { accept_max: f64, reject_median: f64 },

    #[error("noise scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("budget-split baseline requires a horizon")]
    MissingHorizon,

    #[error("report for t={got} requested, expected t={expected}")]
    OutOfOrderReport { expected: u64, got: u64 },

    #[error("t={t} lies beyond the budgeted horizon {horizon}")]
    HorizonExceeded { t: u64, horizon: u64 },

    #[error("all true query values are zero")]
    ZeroDenominator,

    #[error("no histogram bin has at least {floor} samples on both sides")]
    InsufficientCounts { floor: u64 },

    #[error("datasets are not neighbours: {0}")]
    NotNeighbours(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty file")]
    EmptyFile,

    #[error("row {row}: expected {expected} values, got {got}")]
    RaggedRows { row: usize, expected: usize, got: usize },

    #[error("cannot parse value at row {row}, column {col}: {value:?}")]
    ParseError { row: usize, col: usize, value: String },

    #[error("missing cell for series {series:?} at {timestamp:?}")]
    MissingCell { series: String, timestamp: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Stable machine-readable code, used on the CLI's `ERROR <code>: <detail>` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "EmptyDataset",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroPeriod => "ZeroPeriod",
            Error::InvalidInterval { .. } => "InvalidInterval",
            Error::HorizonShorterThanPeriod { .. } => "HorizonShorterThanPeriod",
            Error::DegenerateBlock { .. } => "DegenerateBlock",
            Error::TooFewRealizations { .. } => "TooFewRealizations",
            Error::InvalidThresholds { .. } => "InvalidThresholds",
            Error::NonPositiveScale(_) => "NonPositiveScale",
            Error::NonPositiveEpsilon(_) => "NonPositiveEpsilon",
            Error::MissingHorizon => "MissingHorizon",
            Error::OutOfOrderReport { .. } => "OutOfOrderReport",
            Error::HorizonExceeded { .. } => "HorizonExceeded",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::InsufficientCounts { .. } => "InsufficientCounts",
            Error::NotNeighbours(_) => "NotNeighbours",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::EmptyFile => "EmptyFile",
            Error::RaggedRows { .. } => "RaggedRows",
            Error::ParseError { .. } => "ParseError",
            Error::MissingCell { .. } => "MissingCell",
            Error::Io(_) => "Io",
            Error::Serialization(_) => "Serialization",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
