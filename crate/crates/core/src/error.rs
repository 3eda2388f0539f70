use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("distance matrix invariant violated at ({row}, {col}): {reason}")]
    NotADistance {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("parameter `{name}` out of range: {value} ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("row {0} has only zero distances; no bandwidth can be calibrated")]
    ZeroRow(usize),

    #[error("non-finite objective at iteration {0}")]
    NumericalAbort(usize),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
