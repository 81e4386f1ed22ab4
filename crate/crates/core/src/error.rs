use std::fmt;

use serde::Serialize;

/// Location of a bad cell inside an input file. `row` is the 1-based line
/// number, so the first data row under a header is row 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellLocation {
    pub file: String,
    pub row: u64,
    pub column: Option<String>,
}

impl fmt::Display for CellLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(col) => write!(f, "{}: row {}, column `{}`", self.file, self.row, col),
            None => write!(f, "{}: row {}", self.file, self.row),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input for `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("degenerate cell: age group {age_group} has zero total")]
    DegenerateCell { age_group: String },

    #[error("SMAM undefined: proportion never married at the upper age limit is 1")]
    UndefinedSmam,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("year {year} outside series [{first}, {last}]")]
    Range { year: f64, first: i64, last: i64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing data for region `{region}`: {what}")]
    MissingData { region: String, what: String },

    #[error("{location}: {message}")]
    Data {
        location: CellLocation,
        message: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's data rather than by a computation
    /// that failed on otherwise valid data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput { .. }
                | Error::Schema(_)
                | Error::Data { .. }
                | Error::MissingData { .. }
                | Error::Io { .. }
                | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
