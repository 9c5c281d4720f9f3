use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("cannot decode image {}: {message}", .path.display())]
    CorruptImage { path: PathBuf, message: String },

    #[error("class table mismatch: {0}")]
    ClassTableMismatch(String),

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
