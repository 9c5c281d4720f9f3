pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("architecture: {0}")]
    Architecture(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("channel mismatch: model reads {expected} planes, input has {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("no valid depth")]
    NoValidDepth,

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}, lr {lr}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        lr: f64,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] sightwalk_core::Error),
}
