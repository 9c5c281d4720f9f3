pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("method {method}: {reason}")]
    Method { method: &'static str, reason: String },

    #[error(transparent)]
    Core(#[from] sightwalk_core::Error),

    #[error(transparent)]
    Nets(#[from] sightwalk_nets::Error),

    #[error(transparent)]
    Synth(#[from] sightwalk_synth::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
