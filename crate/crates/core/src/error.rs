use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} not found: {1}")]
    NotFound(&'static str, PathBuf),

    #[error("invalid JSON document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("ontology load error: {0}")]
    Ontology(String),

    #[error("dangling endpoint: edge references undeclared IRI {0}")]
    DanglingEndpoint(String),

    #[error("duplicate entity id {0}")]
    DuplicateEntity(String),

    #[error("unknown entity {0}")]
    UnknownEntity(String),

    #[error("entity {iri} is a {actual}, expected {expected}")]
    KindMismatch {
        iri: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("embedding file line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("empty bag of words")]
    EmptyBag,

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty neighbour list")]
    EmptyNeighbors,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("dimension mismatch for {what}: checkpoint has {checkpoint}, config has {config}")]
    DimensionMismatch {
        what: &'static str,
        checkpoint: usize,
        config: usize,
    },

    #[error("alignment parse error: {0}")]
    Alignment(String),

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error("gradient check failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for verification failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) => 1,
            _ => 2,
        }
    }
}
