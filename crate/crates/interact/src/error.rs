pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown message type {0:?}")]
    UnknownType(String),

    #[error("sequence number {got} does not follow {last}")]
    SequenceRegression { last: u64, got: u64 },

    #[error("truncated payload: header announces {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    /// The byte stream cannot be split into messages any more.
    #[error("framing: {0}")]
    Framing(String),

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error("touch ({x}, {y}) is outside the unit square")]
    Coordinates { x: f64, y: f64 },

    #[error("session: {0}")]
    Session(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] sightwalk_core::Error),

    #[error(transparent)]
    Nets(#[from] sightwalk_nets::Error),

    #[error("websocket: {0}")]
    WebSocket(#[from] tungstenite::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
