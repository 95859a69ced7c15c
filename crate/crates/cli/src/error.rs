use std::fmt;

use drill::embeddings::EmbeddingError;
use drill::eval::EvalError;
use drill::kb::KbError;
use drill::lpgen::{LpFileError, LpGenError};
use drill::qnet::QNetError;
use drill::search::SearchError;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_INVALID: u8 = 4;
pub const EXIT_NOTHING_TO_DO: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl fmt::Display) -> Self {
        CliError { code, message: message.to_string() }
    }

    pub fn invalid(message: impl fmt::Display) -> Self {
        CliError::new(EXIT_INVALID, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<KbError> for CliError {
    fn from(e: KbError) -> Self {
        let code = match e {
            KbError::Io { .. } => EXIT_IO,
            KbError::Format { .. } => EXIT_FORMAT,
            KbError::UnknownName(_) | KbError::UnknownIndividual(_) => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

impl From<LpFileError> for CliError {
    fn from(e: LpFileError) -> Self {
        let code = match e {
            LpFileError::Io { .. } => EXIT_IO,
            LpFileError::Json(_) | LpFileError::Target { .. } => EXIT_FORMAT,
            _ => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

impl From<LpGenError> for CliError {
    fn from(e: LpGenError) -> Self {
        let code = match e {
            LpGenError::NoConceptsFound => EXIT_NOTHING_TO_DO,
            _ => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

impl From<QNetError> for CliError {
    fn from(e: QNetError) -> Self {
        let code = match e {
            QNetError::Io { .. } => EXIT_IO,
            QNetError::Checkpoint { .. } | QNetError::ShapeMismatch { .. } | QNetError::InvalidShape(_) => EXIT_FORMAT,
            QNetError::UnknownName(_) | QNetError::InvalidConfig(_) => EXIT_INVALID,
            QNetError::NoProblems | QNetError::EmptyBatch => EXIT_NOTHING_TO_DO,
        };
        CliError::new(code, e)
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        let code = match e {
            EmbeddingError::Io { .. } => EXIT_IO,
            EmbeddingError::Parse { .. } | EmbeddingError::DimensionMismatch { .. } => EXIT_FORMAT,
            EmbeddingError::MissingIndividual(_) | EmbeddingError::InvalidDimension => EXIT_INVALID,
        };
        CliError::new(code, e)
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        let code = match e {
            SearchError::InvalidProblem(_) | SearchError::UnknownName(_) => EXIT_INVALID,
            SearchError::EmptyFrontier | SearchError::Scorer(_) => EXIT_OTHER,
        };
        CliError::new(code, e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Search(e) => e.into(),
            EvalError::MissingModel | EvalError::Model(_) => CliError::invalid(e),
            EvalError::Csv(_) | EvalError::Io(_) => CliError::new(EXIT_IO, e),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::new(EXIT_IO, format!("cannot write {}: {e}", path.display()))
}
