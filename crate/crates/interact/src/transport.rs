//! Byte transports under the protocol: a plain stream socket, or WebSocket
//! with one protocol message per text frame.

use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use crate::Result;

pub(crate) const POLL: Duration = Duration::from_millis(10);
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);

fn handshake_error<R>(e: tungstenite::HandshakeError<R>) -> crate::Error
where
    R: tungstenite::handshake::HandshakeRole,
{
    match e {
        tungstenite::HandshakeError::Failure(e) => crate::Error::WebSocket(e),
        tungstenite::HandshakeError::Interrupted(_) => crate::Error::Input("websocket handshake timed out".into()),
    }
}

pub(crate) enum Received {
    Data(Vec<u8>),
    Idle,
    Closed,
}

pub(crate) trait Transport {
    fn recv(&mut self) -> Result<Received>;
    fn send(&mut self, bytes: Vec<u8>) -> Result<()>;
}

pub(crate) struct TcpTransport {
    stream: TcpStream,
    buf: Vec<u8>,
}

impl TcpTransport {
    pub(crate) fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(POLL))?;
        stream.set_nodelay(true)?;
        Ok(Self {
            stream,
            buf: vec![0; 64 * 1024],
        })
    }
}

impl Transport for TcpTransport {
    fn recv(&mut self) -> Result<Received> {
        match self.stream.read(&mut self.buf) {
            Ok(0) => Ok(Received::Closed),
            Ok(n) => Ok(Received::Data(self.buf[..n].to_vec())),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {
                Ok(Received::Idle)
            }
            Err(e) if matches!(e.kind(), ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted) => {
                Ok(Received::Closed)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn send(&mut self, bytes: Vec<u8>) -> Result<()> {
        self.stream.write_all(&bytes)?;
        Ok(())
    }
}

pub(crate) struct WsTransport {
    ws: tungstenite::WebSocket<TcpStream>,
}

impl WsTransport {
    pub(crate) fn accept(stream: TcpStream) -> Result<Self> {
        stream.set_nonblocking(false)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(HANDSHAKE_TIMEOUT))?;
        let ws = tungstenite::accept(stream).map_err(handshake_error)?;
        ws.get_ref().set_read_timeout(Some(POLL))?;
        Ok(Self { ws })
    }

    /// Client side of the handshake, for `ws://addr/`.
    pub(crate) fn connect(addr: SocketAddr) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(HANDSHAKE_TIMEOUT))?;
        let (ws, _) = tungstenite::client(format!("ws://{addr}/"), stream).map_err(handshake_error)?;
        ws.get_ref().set_read_timeout(Some(POLL))?;
        Ok(Self { ws })
    }
}

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted))
}

impl Transport for WsTransport {
    fn recv(&mut self) -> Result<Received> {
        use tungstenite::Message as Ws;
        match self.ws.read() {
            Ok(Ws::Text(t)) => Ok(Received::Data(t.as_bytes().to_vec())),
            Ok(Ws::Binary(b)) => Ok(Received::Data(b.to_vec())),
            Ok(Ws::Close(_)) => Ok(Received::Closed),
            Ok(_) => Ok(Received::Idle),
            Err(e) if would_block(&e) => Ok(Received::Idle),
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => Ok(Received::Closed),
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted) => {
                Ok(Received::Closed)
            }
            Err(tungstenite::Error::Protocol(_)) => Ok(Received::Closed),
            Err(e) => Err(e.into()),
        }
    }

    fn send(&mut self, bytes: Vec<u8>) -> Result<()> {
        let text = String::from_utf8(bytes).map_err(|_| crate::Error::Input("message is not UTF-8".into()))?;
        let mut r = self.ws.send(tungstenite::Message::Text(text.into()));
        // a write interrupted by the read timeout is completed by flushing
        while matches!(&r, Err(e) if would_block(e)) {
            r = self.ws.flush();
        }
        r.map_err(Into::into)
    }
}

