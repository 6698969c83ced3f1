use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the layer that raises them; the CLI maps them onto
/// process exit codes (usage 2, I/O 3, data or model schema 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("model kind mismatch: expected {expected:?}, found {found:?}")]
    ModelKind {
        expected: &'static str,
        found: String,
    },

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("column {0:?} is constant and cannot be normalized")]
    ConstantColumn(String),

    #[error("split ratios sum to {sum}, expected 1")]
    BadRatios { sum: f64 },

    #[error("split counts sum to {requested}, dataset has {available} rows")]
    BadCounts { requested: usize, available: usize },

    #[error("invalid range for {name}: min {min} must be below max {max}")]
    BadRange { name: String, min: f64, max: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is constant; correlation undefined")]
    ConstantInput,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("no rule fires: total firing strength underflowed to zero")]
    DegenerateFiring,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
