//! Live two-seat sessions: state machine, wire protocol, log export.
//!
//! [`SessionService`] owns many independent sessions. Each one sits behind
//! its own mutex, so all mutations of a session are serialized while
//! different sessions proceed in parallel.

mod log;
mod protocol;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::game::Action;
use crate::scoring::CertaintyLevel;
use crate::sim::SessionConfig;

pub use log::{log_records, parse_jsonl, replay, to_jsonl, LogRecord, ReplayIssue};
pub use protocol::{
    ClientMessage, CutoffAnswer, ErrorCode, FaultAnswer, FinishReason, PostGameAnswers,
    ProtocolError, ServerMessage, SimpleAnswer,
};
pub use state::{
    Occupant, Phase, RoundRecord, Session, Snapshot, CERTAINTY_MS, DECISION_MS, INSTRUCTIONS_MS,
    RESULTS_MS, TIMEOUT_ACTION, TIMEOUT_CERTAINTY,
};

/// Session handle, `s<n>` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl FromStr for SessionId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        s.strip_prefix('s')
            .and_then(|n| n.parse().ok())
            .map(SessionId)
            .ok_or_else(|| {
                ProtocolError::new(ErrorCode::UnknownSession, format!("bad session id {s:?}"))
            })
    }
}

impl Serialize for SessionId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SessionId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Registry of running sessions. Cheap to share behind an `Arc`.
#[derive(Debug, Default)]
pub struct SessionService {
    sessions: RwLock<BTreeMap<SessionId, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionService {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_session(&self, cfg: SessionConfig) -> Result<SessionId, ProtocolError> {
        let id = SessionId(self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Session::new(id, cfg)?;
        self.sessions
            .write()
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(id)
    }

    fn get(&self, id: SessionId) -> Result<Arc<Mutex<Session>>, ProtocolError> {
        self.sessions.read().get(&id).cloned().ok_or_else(|| {
            ProtocolError::new(ErrorCode::UnknownSession, format!("no session {id}"))
        })
    }

    /// Runs `f` with the session locked.
    pub fn with_session<T>(
        &self,
        id: SessionId,
        f: impl FnOnce(&mut Session) -> Result<T, ProtocolError>,
    ) -> Result<T, ProtocolError> {
        let session = self.get(id)?;
        let mut guard = session.lock();
        f(&mut guard)
    }

    pub fn ids(&self) -> Vec<SessionId> {
        self.sessions.read().keys().copied().collect()
    }

    pub fn remove(&self, id: SessionId) -> Result<(), ProtocolError> {
        self.sessions.write().remove(&id).map(drop).ok_or_else(|| {
            ProtocolError::new(ErrorCode::UnknownSession, format!("no session {id}"))
        })
    }

    pub fn join(
        &self,
        id: SessionId,
        seat: u8,
        occupant: Occupant,
        now: u64,
    ) -> Result<(), ProtocolError> {
        self.with_session(id, |s| s.join(seat, occupant, now))
    }

    pub fn submit_decision(
        &self,
        id: SessionId,
        seat: u8,
        token: &str,
        action: Action,
        now: u64,
    ) -> Result<(), ProtocolError> {
        self.with_session(id, |s| s.submit_decision(seat, token, action, now))
    }

    pub fn submit_certainty(
        &self,
        id: SessionId,
        seat: u8,
        token: &str,
        level: CertaintyLevel,
        now: u64,
    ) -> Result<(), ProtocolError> {
        self.with_session(id, |s| s.submit_certainty(seat, token, level, now))
    }

    pub fn submit_answers(
        &self,
        id: SessionId,
        seat: u8,
        token: &str,
        answers: PostGameAnswers,
    ) -> Result<(), ProtocolError> {
        self.with_session(id, |s| s.submit_answers(seat, token, answers))
    }

    /// Applies a client message from an already-joined seat.
    pub fn handle(
        &self,
        id: SessionId,
        seat: u8,
        token: &str,
        msg: ClientMessage,
        now: u64,
    ) -> Result<(), ProtocolError> {
        match msg {
            ClientMessage::Join { .. } => Err(ProtocolError::new(
                ErrorCode::InvalidMessage,
                "already joined",
            )),
            ClientMessage::Decision { action } => {
                self.submit_decision(id, seat, token, action, now)
            }
            ClientMessage::Certainty { level } => {
                self.submit_certainty(id, seat, token, level, now)
            }
            ClientMessage::PostGame { answers } => self.submit_answers(id, seat, token, answers),
        }
    }

    pub fn advance(&self, id: SessionId, now: u64) -> Result<Phase, ProtocolError> {
        self.with_session(id, |s| Ok(s.advance(now)))
    }

    /// Advances every session; used by the server's ticker.
    pub fn advance_all(&self, now: u64) {
        let sessions: Vec<_> = self.sessions.read().values().cloned().collect();
        for s in sessions {
            s.lock().advance(now);
        }
    }

    pub fn take_messages(
        &self,
        id: SessionId,
        seat: u8,
    ) -> Result<Vec<ServerMessage>, ProtocolError> {
        self.with_session(id, |s| s.take_messages(seat))
    }

    /// Token-checked drain for transports that cannot hold a connection.
    pub fn take_messages_for(
        &self,
        id: SessionId,
        seat: u8,
        token: &str,
    ) -> Result<Vec<ServerMessage>, ProtocolError> {
        self.with_session(id, |s| {
            s.check_token(seat, token)?;
            s.take_messages(seat)
        })
    }

    pub fn disconnect(&self, id: SessionId, seat: u8) -> Result<(), ProtocolError> {
        self.with_session(id, |s| s.disconnect(seat))
    }

    pub fn snapshot(&self, id: SessionId) -> Result<Snapshot, ProtocolError> {
        self.with_session(id, |s| Ok(s.snapshot()))
    }

    pub fn export_log(&self, id: SessionId) -> Result<String, ProtocolError> {
        self.with_session(id, |s| Ok(to_jsonl(&log_records(s))))
    }
}
