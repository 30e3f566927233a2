use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by category so the CLI can map them onto exit codes:
/// everything except [`Error::Io`] and [`Error::Internal`] is a validation
/// failure caused by bad input or bad parameters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coordinate out of range: {0}")]
    OutOfRange(String),

    #[error("points straddle the antimeridian (lon {0} and {1})")]
    AntimeridianStraddle(f64, f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid trajectory '{id}': {reason}")]
    InvalidTrajectory { id: String, reason: String },

    #[error("trajectory '{0}' has no labels; labeled data required")]
    MissingLabels(String),

    #[error("feature length mismatch: model expects {expected}, got {actual}")]
    FeatureLength { expected: usize, actual: usize },

    #[error("window length mismatch: {0}")]
    WindowMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("row {row}: schema violation: {reason}")]
    Schema { row: usize, reason: String },

    #[error("row {row}: duplicate timestamp {t} for trajectory '{id}'")]
    DuplicateTimestamp { row: usize, id: String, t: i64 },

    #[error("row {row}: {field} = {value} is out of range")]
    RowRange {
        row: usize,
        field: &'static str,
        value: f64,
    },

    #[error("trajectory '{0}' is partially labeled; labels must be all-or-nothing")]
    PartialLabels(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("not enough objects for {folds} folds (found {objects})")]
    TooFewObjects { folds: usize, objects: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by user input or parameters.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
