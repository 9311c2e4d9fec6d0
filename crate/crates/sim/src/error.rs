use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("missing required config key `{0}`")]
    Missing(String),
    #[error("config key `{key}` must be {expected}")]
    Type { key: String, expected: &'static str },
    #[error("config key `{key}` = {value} violates bound: {bound}")]
    Range { key: String, value: String, bound: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] passage_core::Error),
    #[error("{context}: {source}")]
    Point { context: String, source: Box<Error> },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn range(key: &str, value: impl ToString, bound: impl Into<String>) -> Self {
        Error::Range { key: key.to_string(), value: value.to_string(), bound: bound.into() }
    }

    pub(crate) fn at(self, context: String) -> Self {
        Error::Point { context, source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
