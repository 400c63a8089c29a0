//! Crate-wide error type.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the pipeline can surface.
///
/// Variants are grouped roughly by where they originate: file loading,
/// embedding providers, ranking, prompting, choice scoring, evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {path}")]
    MissingFile { path: PathBuf },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate doc_id \"{doc_id}\"")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        doc_id: String,
    },

    #[error("{path}:{line}: expected exactly 4 choices, found {found}")]
    ChoiceCount {
        path: PathBuf,
        line: usize,
        found: usize,
    },

    #[error("{path}:{line}: gold_index {value} outside [0, 3]")]
    GoldIndexRange {
        path: PathBuf,
        line: usize,
        value: i64,
    },

    #[error("{path}:{line}: region \"{region}\" has an empty alias list")]
    EmptyAliasList {
        path: PathBuf,
        line: usize,
        region: String,
    },

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cosine is undefined for a zero vector")]
    ZeroVector,

    #[error("value {value} outside expected range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("embedding provider unavailable: {message}")]
    ProviderUnavailable { message: String },

    #[error("negative lexical score {value} for doc \"{doc_id}\"")]
    NegativeScore { doc_id: String, value: f64 },

    #[error("region \"{0}\" not present in gazetteer")]
    UnknownRegion(String),

    #[error("evidence bundle for \"{bundle}\" does not match question \"{question}\"")]
    IdMismatch { bundle: String, question: String },

    #[error("non-finite logit for question \"{question_id}\"")]
    NonFiniteLogit { question_id: String },

    #[error("choice scorer unavailable: {message} (batch question ids: {question_ids:?})")]
    ScorerUnavailable {
        message: String,
        question_ids: Vec<String>,
    },

    #[error("question \"{0}\" has no gold answer")]
    MissingGold(String),

    #[error("prediction for unknown question \"{0}\"")]
    UnmatchedPrediction(String),

    #[error("malformed prompt template: {0}")]
    MalformedTemplate(String),

    #[error("unsupported index snapshot version {0}")]
    SnapshotVersion(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Wrap an i/o failure, mapping `NotFound` to the dedicated variant.
    pub(crate) fn from_io(path: &std::path::Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Error::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}
