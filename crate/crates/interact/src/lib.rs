//! Everything between the perception pipeline and the user: which
//! instructions are spoken, touch exploration of a frozen snapshot, and the
//! message protocol served over TCP and WebSocket.

pub mod client;
pub mod connection;
mod error;
pub mod feedback;
pub mod protocol;
pub mod server;
pub mod session;
mod transport;

pub use connection::{Connection, ConnectionConfig, FramePercept};
pub use error::{Error, Result};
pub use feedback::{instruction_to_feedback, volume_for_distance, Utterance, Volume, V_MIN};
pub use protocol::{decode_message, encode_message, Message, MessageReader, MessageType, Payload, Snapshot};
pub use server::{serve, FrameSource, ModelPerception, Perception, ServeConfig, Server};
pub use session::{start_session, ExplorationSession, SessionOptions, SessionState};
