//! Wire messages. Every message is a JSON object tagged by `"type"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::game::Action;
use crate::scoring::CertaintyLevel;
use crate::time::ArrivalTime;

use super::{Phase, SessionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    WrongPhase,
    DuplicateSubmission,
    UnknownSeat,
    UnknownSession,
    SeatTaken,
    BadToken,
    InvalidConfig,
    /// The seat's deadline had passed; the timeout default was applied.
    TooLate,
    InvalidMessage,
    InvalidAnswer,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::WrongPhase => "wrong_phase",
            ErrorCode::DuplicateSubmission => "duplicate_submission",
            ErrorCode::UnknownSeat => "unknown_seat",
            ErrorCode::UnknownSession => "unknown_session",
            ErrorCode::SeatTaken => "seat_taken",
            ErrorCode::BadToken => "bad_token",
            ErrorCode::InvalidConfig => "invalid_config",
            ErrorCode::TooLate => "too_late",
            ErrorCode::InvalidMessage => "invalid_message",
            ErrorCode::InvalidAnswer => "invalid_answer",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub message: String,
}

impl ProtocolError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ProtocolError {
            code,
            message: message.into(),
        }
    }

    pub fn to_message(&self) -> ServerMessage {
        ServerMessage::Error {
            code: self.code,
            message: self.message.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Ruin,
    Completed,
}

/// Messages a seat receives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Joined {
        session: SessionId,
        seat: u8,
        phase: Phase,
    },
    RoundStart {
        round: u32,
        your_arrival: ArrivalTime,
        deadline_ms: u64,
    },
    /// Confirms a submission. After a decision, `deadline_ms` is the time left
    /// for the certainty report.
    Ack {
        of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        deadline_ms: Option<u64>,
    },
    RoundResult {
        round: u32,
        arrivals: [ArrivalTime; 2],
        actions: [Action; 2],
        your_certainty: CertaintyLevel,
        your_penalty: f64,
        bankrolls: [f64; 2],
    },
    GameOver {
        reason: FinishReason,
        final_bonus: f64,
    },
    Error {
        code: ErrorCode,
        #[serde(default)]
        message: String,
    },
}

/// Messages a client sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Join {
        session: SessionId,
        seat: u8,
        token: String,
    },
    Decision {
        action: Action,
    },
    Certainty {
        level: CertaintyLevel,
    },
    PostGame {
        answers: PostGameAnswers,
    },
}

/// "Whose fault was the miscoordination?"
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAnswer {
    Mine,
    Other,
    OtherReason,
}

/// "At what time is it safe to go to the canteen?"
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffAnswer {
    DontKnow,
    NoSuchTime,
    At(ArrivalTime),
}

/// Yes / No / Don't know.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimpleAnswer {
    Yes,
    No,
    DontKnow,
}

macro_rules! string_enum {
    ($ty:ty, $($variant:path => $text:expr),+ $(,)?) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($variant => $text,)+
                }
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($variant),)+
                    _ => Err(format!("not an allowed answer: {s:?}")),
                }
            }
        }
    };
}

string_enum!(FaultAnswer,
    FaultAnswer::Mine => "My fault",
    FaultAnswer::Other => "Other's fault",
    FaultAnswer::OtherReason => "Other reason",
);

string_enum!(SimpleAnswer,
    SimpleAnswer::Yes => "Yes",
    SimpleAnswer::No => "No",
    SimpleAnswer::DontKnow => "Don't know",
);

impl CutoffAnswer {
    pub fn as_string(&self) -> String {
        match self {
            CutoffAnswer::DontKnow => "I don't know".to_string(),
            CutoffAnswer::NoSuchTime => "There is no such time".to_string(),
            CutoffAnswer::At(t) => t.to_string(),
        }
    }
}

impl FromStr for CutoffAnswer {
    type Err = String;

    /// `I don't know`, `There is no such time`, or a time from 8:00 to 9:10.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "I don't know" => Ok(CutoffAnswer::DontKnow),
            "There is no such time" => Ok(CutoffAnswer::NoSuchTime),
            _ => match s.parse::<ArrivalTime>() {
                Ok(t) if (0..=70).contains(&t.minutes()) && s == t.to_string() => {
                    Ok(CutoffAnswer::At(t))
                }
                _ => Err(format!("not an allowed answer: {s:?}")),
            },
        }
    }
}

macro_rules! serde_via_str {
    ($ty:ty, $to:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                #[allow(clippy::redundant_closure_call)]
                s.serialize_str(&($to)(self))
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_str!(FaultAnswer, |a: &FaultAnswer| a.as_str().to_string());
serde_via_str!(SimpleAnswer, |a: &SimpleAnswer| a.as_str().to_string());
serde_via_str!(CutoffAnswer, CutoffAnswer::as_string);

/// Answers to the questions asked after the last round. Every field is
/// optional; `strategy` is free text stored verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostGameAnswers {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simple: Option<SimpleAnswer>,
}
