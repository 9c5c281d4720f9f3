//! Wire format. A message is one header line
//!
//! ```text
//! TYPE seq session payload_len\n
//! ```
//!
//! followed by `payload_len` bytes of compact JSON and a closing `\n`.
//! `session` is `-` when the message belongs to no session. The same bytes
//! travel over a plain stream socket and, one message per frame, over
//! WebSocket. Field-level grammar is in PROTOCOL.md.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sightwalk_core::{ActionLabel, ClassTable};

use crate::feedback::{Utterance, Volume};
use crate::{Error, Result};

/// Longest accepted payload; a 640×480 snapshot is well under this.
pub const MAX_PAYLOAD: usize = 16 << 20;
const MAX_HEADER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageType {
    Snapshot,
    Ready,
    Touch,
    Utterance,
    Instruction,
    EndSession,
    Error,
}

impl MessageType {
    pub const ALL: [MessageType; 7] = [
        MessageType::Snapshot,
        MessageType::Ready,
        MessageType::Touch,
        MessageType::Utterance,
        MessageType::Instruction,
        MessageType::EndSession,
        MessageType::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageType::Snapshot => "SNAPSHOT",
            MessageType::Ready => "READY",
            MessageType::Touch => "TOUCH",
            MessageType::Utterance => "UTTERANCE",
            MessageType::Instruction => "INSTRUCTION",
            MessageType::EndSession => "END_SESSION",
            MessageType::Error => "ERROR",
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MessageType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownType(s.to_string()))
    }
}

/// Semantic map plus millimetre depth, frozen for one exploration session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub classes: Vec<String>,
    /// Row-major class indices.
    pub labels: Vec<u8>,
    /// Row-major depth in millimetres, 0 = missing.
    pub depth_mm: Vec<u16>,
    pub width: usize,
    pub height: usize,
    pub near_mm: u32,
    pub far_mm: u32,
}

impl Snapshot {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(format!("snapshot: {m}")));
        ClassTable::from_names(&self.classes)?;
        let n = self.width * self.height;
        if n == 0 {
            return bad("empty grid".into());
        }
        if self.labels.len() != n || self.depth_mm.len() != n {
            return bad(format!(
                "{}×{} grid but {} labels and {} depths",
                self.width,
                self.height,
                self.labels.len(),
                self.depth_mm.len()
            ));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| usize::from(l) >= self.classes.len()) {
            return bad(format!("label {l} outside {} classes", self.classes.len()));
        }
        if self.near_mm >= self.far_mm {
            return bad(format!("near {} mm must be below far {} mm", self.near_mm, self.far_mm));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Touch {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruction {
    pub action: ActionLabel,
    pub probabilities: [f64; 3],
    pub text: String,
    pub volume: Volume,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `None` is the client's request for a snapshot; the server answers
    /// with the data.
    Snapshot(Option<Snapshot>),
    /// `cue` asks the client to play the readiness sound.
    Ready { cue: bool },
    Touch(Touch),
    Utterance(Utterance),
    Instruction(Instruction),
    EndSession,
    Error { message: String },
}

impl Payload {
    pub fn kind(&self) -> MessageType {
        match self {
            Payload::Snapshot(_) => MessageType::Snapshot,
            Payload::Ready { .. } => MessageType::Ready,
            Payload::Touch(_) => MessageType::Touch,
            Payload::Utterance(_) => MessageType::Utterance,
            Payload::Instruction(_) => MessageType::Instruction,
            Payload::EndSession => MessageType::EndSession,
            Payload::Error { .. } => MessageType::Error,
        }
    }

    pub fn error(message: impl fmt::Display) -> Self {
        Payload::Error {
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub seq: u64,
    pub session: Option<String>,
    pub payload: Payload,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadyBody {
    cue: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErrorBody {
    message: String,
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(v).map_err(|e| Error::Malformed(e.to_string()))
}

fn from_json<'a, T: Deserialize<'a>>(kind: MessageType, bytes: &'a [u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Malformed(format!("{kind} payload: {e}")))
}

fn encode_payload(p: &Payload) -> Result<Vec<u8>> {
    match p {
        Payload::Snapshot(None) | Payload::EndSession => json(&Empty {}),
        Payload::Snapshot(Some(s)) => {
            s.validate()?;
            json(s)
        }
        Payload::Ready { cue } => json(&ReadyBody { cue: *cue }),
        Payload::Touch(t) => {
            if !t.x.is_finite() || !t.y.is_finite() {
                return Err(Error::Input("touch coordinates must be finite".into()));
            }
            json(t)
        }
        Payload::Utterance(u) => json(u),
        Payload::Instruction(i) => json(i),
        Payload::Error { message } => json(&ErrorBody {
            message: message.clone(),
        }),
    }
}

fn decode_payload(kind: MessageType, bytes: &[u8]) -> Result<Payload> {
    Ok(match kind {
        MessageType::Snapshot => {
            if from_json::<Empty>(kind, bytes).is_ok() {
                Payload::Snapshot(None)
            } else {
                let s: Snapshot = from_json(kind, bytes)?;
                s.validate()?;
                Payload::Snapshot(Some(s))
            }
        }
        MessageType::Ready => Payload::Ready {
            cue: from_json::<ReadyBody>(kind, bytes)?.cue,
        },
        MessageType::Touch => Payload::Touch(from_json(kind, bytes)?),
        MessageType::Utterance => Payload::Utterance(from_json(kind, bytes)?),
        MessageType::Instruction => Payload::Instruction(from_json(kind, bytes)?),
        MessageType::EndSession => {
            from_json::<Empty>(kind, bytes)?;
            Payload::EndSession
        }
        MessageType::Error => Payload::Error {
            message: from_json::<ErrorBody>(kind, bytes)?.message,
        },
    })
}

fn valid_session_id(s: &str) -> bool {
    !s.is_empty() && s != "-" && s.len() <= 64 && s.bytes().all(|b| b.is_ascii_graphic())
}

pub fn encode_message(m: &Message) -> Result<Vec<u8>> {
    let session = match &m.session {
        Some(s) if valid_session_id(s) => s.as_str(),
        Some(s) => return Err(Error::Input(format!("bad session id {s:?}"))),
        None => "-",
    };
    let payload = encode_payload(&m.payload)?;
    let mut out = format!("{} {} {} {}\n", m.payload.kind(), m.seq, session, payload.len()).into_bytes();
    out.extend_from_slice(&payload);
    out.push(b'\n');
    Ok(out)
}

struct Header {
    kind: std::result::Result<MessageType, String>,
    seq: u64,
    session: Option<String>,
    len: usize,
}

fn parse_header(line: &[u8]) -> Result<Header> {
    let text = std::str::from_utf8(line).map_err(|_| Error::Framing("header is not UTF-8".into()))?;
    let fields: Vec<&str> = text.split(' ').collect();
    let [kind, seq, session, len] = fields[..] else {
        return Err(Error::Framing(format!("header {text:?} needs 4 space-separated fields")));
    };
    let num = |s: &str, what: &str| -> Result<u64> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
            return Err(Error::Framing(format!("bad {what} {s:?}")));
        }
        s.parse().map_err(|_| Error::Framing(format!("bad {what} {s:?}")))
    };
    let seq = num(seq, "sequence number")?;
    let len = num(len, "payload length")? as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Framing(format!("payload of {len} bytes exceeds {MAX_PAYLOAD}")));
    }
    let session = match session {
        "-" => None,
        s if valid_session_id(s) => Some(s.to_string()),
        s => return Err(Error::Framing(format!("bad session id {s:?}"))),
    };
    Ok(Header {
        kind: kind.parse::<MessageType>().map_err(|_| kind.to_string()),
        seq,
        session,
        len,
    })
}

/// Outcome of looking for one message at the front of a buffer.
enum Scan {
    /// Need more bytes.
    Partial,
    /// A whole message (or a decode error for it) spanning `used` bytes.
    Done { used: usize, result: Result<Message> },
}

fn scan(buf: &[u8]) -> Result<Scan> {
    let Some(nl) = buf.iter().take(MAX_HEADER + 1).position(|&b| b == b'\n') else {
        if buf.len() > MAX_HEADER {
            return Err(Error::Framing("header line too long".into()));
        }
        return Ok(Scan::Partial);
    };
    let h = parse_header(&buf[..nl])?;
    let end = nl + 1 + h.len;
    if buf.len() < end + 1 {
        return Ok(Scan::Partial);
    }
    if buf[end] != b'\n' {
        return Err(Error::Framing("payload is not followed by a newline".into()));
    }
    let result = match h.kind {
        Err(tag) => Err(Error::UnknownType(tag)),
        Ok(kind) => decode_payload(kind, &buf[nl + 1..end]).map(|payload| Message {
            seq: h.seq,
            session: h.session,
            payload,
        }),
    };
    Ok(Scan::Done { used: end + 1, result })
}

/// Decodes exactly one message.
pub fn decode_message(bytes: &[u8]) -> Result<Message> {
    match scan(bytes)? {
        Scan::Partial => {
            let got = bytes.iter().position(|&b| b == b'\n').map_or(0, |nl| bytes.len() - nl - 1);
            let expected = bytes
                .iter()
                .position(|&b| b == b'\n')
                .and_then(|nl| parse_header(&bytes[..nl]).ok())
                .map_or(0, |h| h.len + 1);
            if expected == 0 {
                Err(Error::Framing("missing header line".into()))
            } else {
                Err(Error::Truncated { expected, got })
            }
        }
        Scan::Done { used, result } if used == bytes.len() => result,
        Scan::Done { used, .. } => Err(Error::Framing(format!("{} trailing bytes", bytes.len() - used))),
    }
}

/// Incremental decoder for one direction of a connection. Rejects any
/// message whose sequence number does not exceed the previous one.
#[derive(Debug, Default)]
pub struct MessageReader {
    buf: Vec<u8>,
    last_seq: Option<u64>,
}

impl MessageReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes received but not yet decoded.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// The next decoded message, `Ok(None)` if incomplete. A framing error
    /// (bad header) leaves the stream unusable; errors inside a well-framed
    /// message consume that message and the stream continues.
    pub fn next_message(&mut self) -> Result<Option<Message>> {
        let (used, result) = match scan(&self.buf)? {
            Scan::Partial => return Ok(None),
            Scan::Done { used, result } => (used, result),
        };
        self.buf.drain(..used);
        let m = result?;
        if let Some(last) = self.last_seq {
            if m.seq <= last {
                return Err(Error::SequenceRegression { last, got: m.seq });
            }
        }
        self.last_seq = Some(m.seq);
        Ok(Some(m))
    }
}

/// Whether a decode error means the byte stream has lost framing.
pub fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Framing(_))
}
