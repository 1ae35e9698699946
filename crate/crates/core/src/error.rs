use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("validation error on {date}: {reason}")]
    Validation { date: NaiveDate, reason: String },

    #[error("ordering error: {next} does not follow {prev}")]
    Ordering { prev: NaiveDate, next: NaiveDate },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("singular design matrix")]
    SingularDesign,

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("date {0} not present in frame")]
    MissingDate(NaiveDate),

    #[error("empty evaluation range: {0}")]
    EmptyRange(String),

    #[error("no overlap: {0}")]
    EmptyOverlap(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input data rather than I/O or numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Validation { .. }
                | Error::Ordering { .. }
                | Error::Domain(_)
                | Error::MissingDate(_)
                | Error::EmptyRange(_)
                | Error::EmptyOverlap(_)
                | Error::Alignment(_)
                | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}
