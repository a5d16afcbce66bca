use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {constraint}")]
    Invalid { key: String, constraint: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] supercsp::Error),
    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type CliResult<T> = Result<T, CliError>;
