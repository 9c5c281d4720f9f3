//! Minimal blocking clients, for tests and scripted sessions.

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use crate::protocol::{encode_message, Message, MessageReader, Payload};
use crate::transport::{Received, TcpTransport, Transport, WsTransport};
use crate::{Error, Result};

pub struct Client {
    transport: Box<dyn Transport + Send>,
    reader: MessageReader,
    seq: u64,
}

impl Client {
    pub fn tcp(addr: SocketAddr) -> Result<Self> {
        Ok(Self::with(Box::new(TcpTransport::new(TcpStream::connect(addr)?)?)))
    }

    pub fn websocket(addr: SocketAddr) -> Result<Self> {
        Ok(Self::with(Box::new(WsTransport::connect(addr)?)))
    }

    fn with(transport: Box<dyn Transport + Send>) -> Self {
        Self {
            transport,
            reader: MessageReader::new(),
            seq: 0,
        }
    }

    /// Sends the next numbered message; returns its sequence number.
    pub fn send(&mut self, session: Option<&str>, payload: Payload) -> Result<u64> {
        self.seq += 1;
        let m = Message {
            seq: self.seq,
            session: session.map(str::to_string),
            payload,
        };
        self.transport.send(encode_message(&m)?)?;
        Ok(self.seq)
    }

    /// Sends bytes as they are, bypassing numbering.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.transport.send(bytes.to_vec())
    }

    /// The next message, or `None` if nothing arrives within `timeout`.
    pub fn recv(&mut self, timeout: Duration) -> Result<Option<Message>> {
        let t0 = Instant::now();
        loop {
            if let Some(m) = self.reader.next_message()? {
                return Ok(Some(m));
            }
            if t0.elapsed() >= timeout {
                return Ok(None);
            }
            match self.transport.recv()? {
                Received::Data(b) => self.reader.push(&b),
                Received::Idle => {}
                Received::Closed => return Err(Error::Session("server closed the connection".into())),
            }
        }
    }

    /// Receives until `pred` matches, skipping other messages.
    pub fn recv_until(&mut self, timeout: Duration, pred: impl Fn(&Message) -> bool) -> Result<Option<Message>> {
        let t0 = Instant::now();
        while let Some(left) = timeout.checked_sub(t0.elapsed()) {
            match self.recv(left)? {
                Some(m) if pred(&m) => return Ok(Some(m)),
                Some(_) => {}
                None => return Ok(None),
            }
        }
        Ok(None)
    }
}
