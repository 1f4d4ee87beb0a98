//! Experiment front end: configuration, synthetic corpora and artifact output.

pub mod config;
pub mod corpus;
pub mod experiment;

use std::path::PathBuf;

use config::Origin;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown corpus '{0}'")]
    UnknownCorpus(String),
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { key: String, origin: Origin },
    #[error("{origin}: expected 'key = value', found '{line}'")]
    Syntax { origin: Origin, line: String },
    #[error("{origin}: bad value '{value}' for '{key}': {reason}")]
    Value {
        key: String,
        value: String,
        origin: Origin,
        reason: String,
    },
    #[error("missing required setting '{0}'")]
    MissingKey(&'static str),
    #[error("no input: give an image or a corpus")]
    MissingInput,
    #[error("give either images or a corpus, not both")]
    ConflictingInput,
    #[error("two inputs share the name '{0}'")]
    DuplicateImageName(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: acs_core::Error,
    },
    #[error(transparent)]
    Pipeline(acs_core::Error),
}
