//! Per-connection protocol logic, independent of the transport: applies
//! client messages to the connection's one exploration session and numbers
//! everything sent back.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use sightwalk_core::{ClassTable, RgbdFrame, SemanticMap};
use sightwalk_nets::InstructionResult;

use crate::feedback::instruction_to_feedback;
use crate::protocol::{Instruction, Message, Payload, Snapshot};
use crate::session::{start_session, ExplorationSession, SessionOptions};
use crate::{Error, Result};

/// The perception result for one frame, as held by the server.
#[derive(Debug, Clone)]
pub struct FramePercept {
    pub frame: RgbdFrame,
    pub semantic: SemanticMap,
    pub instruction: InstructionResult,
}

impl FramePercept {
    /// Freezes this frame into a snapshot for exploration.
    pub fn snapshot(&self, classes: &ClassTable, near_mm: u32, far_mm: u32) -> Result<Snapshot> {
        if !self.semantic.matches(&self.frame) {
            return Err(Error::Input("semantic map and frame differ in size".into()));
        }
        let s = Snapshot {
            classes: classes.names().map(str::to_string).collect(),
            labels: self.semantic.labels().to_vec(),
            depth_mm: self.frame.depth_mm(),
            width: self.frame.width(),
            height: self.frame.height(),
            near_mm,
            far_mm,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectionConfig {
    pub near_mm: u32,
    pub far_mm: u32,
    pub session: SessionOptions,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        Self {
            near_mm: 500,
            far_mm: 5000,
            session: SessionOptions::default(),
        }
    }
}

pub struct Connection {
    config: ConnectionConfig,
    ids: Arc<AtomicU64>,
    out_seq: u64,
    session: Option<ExplorationSession>,
}

impl Connection {
    /// `ids` is shared by every connection of a server so session ids are unique.
    pub fn new(config: ConnectionConfig, ids: Arc<AtomicU64>) -> Self {
        Self {
            config,
            ids,
            out_seq: 0,
            session: None,
        }
    }

    pub fn session(&self) -> Option<&ExplorationSession> {
        self.session.as_ref().filter(|s| s.is_live())
    }

    /// Wraps a payload into the next outgoing message.
    pub fn message(&mut self, session: Option<String>, payload: Payload) -> Message {
        self.out_seq += 1;
        Message {
            seq: self.out_seq,
            session,
            payload,
        }
    }

    fn error(&mut self, session: Option<String>, e: impl std::fmt::Display) -> Message {
        self.message(session, Payload::error(e))
    }

    /// The earphone message for a new instruction; nothing for GoStraight.
    pub fn instruction(&mut self, r: &InstructionResult) -> Option<Message> {
        let u = instruction_to_feedback(r)?;
        let payload = Payload::Instruction(Instruction {
            action: r.action,
            probabilities: r.probabilities,
            text: u.text,
            volume: u.volume,
        });
        Some(self.message(None, payload))
    }

    /// Reply to a message that could not be decoded.
    pub fn decode_error(&mut self, e: &Error) -> Message {
        self.error(None, e)
    }

    /// Applies one client message. `latest` is the most recent perceived
    /// frame, which a snapshot request freezes.
    pub fn handle(&mut self, msg: Message, latest: Option<&FramePercept>, classes: &ClassTable) -> Vec<Message> {
        let sid = msg.session.clone();
        match msg.payload {
            Payload::Snapshot(None) => {
                if let Some(s) = self.session() {
                    let id = s.id().to_string();
                    return vec![self.error(Some(id.clone()), format!("session {id} is still open"))];
                }
                let Some(p) = latest else {
                    return vec![self.error(None, "no frame has been perceived yet")];
                };
                let started = p
                    .snapshot(classes, self.config.near_mm, self.config.far_mm)
                    .and_then(|snap| {
                        let id = format!("s{}", self.ids.fetch_add(1, Ordering::Relaxed) + 1);
                        start_session(id, snap, self.config.session)
                    });
                match started {
                    Ok((s, cue)) => {
                        let id = Some(s.id().to_string());
                        let data = Payload::Snapshot(Some(s.snapshot().clone()));
                        self.session = Some(s);
                        vec![self.message(id.clone(), data), self.message(id, Payload::Ready { cue })]
                    }
                    Err(e) => vec![self.error(None, e)],
                }
            }
            Payload::Touch(t) => match self.live_session(&sid) {
                Ok(s) => match s.touch(t.x, t.y) {
                    Ok(Some(u)) => vec![self.message(sid, Payload::Utterance(u))],
                    Ok(None) => Vec::new(),
                    Err(e) => vec![self.error(sid, e)],
                },
                Err(e) => vec![self.error(sid, e)],
            },
            Payload::EndSession => match self.live_session(&sid).and_then(|s| s.end()) {
                Ok(()) => {
                    self.session = None;
                    vec![self.message(sid, Payload::EndSession)]
                }
                Err(e) => vec![self.error(sid, e)],
            },
            other => vec![self.error(sid, format!("clients may not send {}", other.kind()))],
        }
    }

    fn live_session(&mut self, sid: &Option<String>) -> Result<&mut ExplorationSession> {
        let Some(s) = self.session.as_mut().filter(|s| s.is_live()) else {
            return Err(Error::Session("no open session".into()));
        };
        match sid {
            Some(id) if id == s.id() => Ok(s),
            Some(id) => Err(Error::Session(format!("session {id} is not open"))),
            None => Err(Error::Session("message names no session".into())),
        }
    }

    /// Ends the open session, if any, when the transport goes away.
    pub fn close(&mut self) {
        if let Some(mut s) = self.session.take() {
            if s.is_live() {
                let _ = s.end();
                log::info!("session {} ended by disconnect", s.id());
            }
        }
    }
}
