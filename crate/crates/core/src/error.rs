use thiserror::Error;

use crate::time::ArrivalTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time {0:?}: expected H:MM on the 10-minute grid")]
    InvalidTime(String),

    #[error("invalid range [{tmin}, {tmax}]: need tmin <= 8:50 and tmax >= 9:00")]
    InvalidRange {
        tmin: ArrivalTime,
        tmax: ArrivalTime,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("proposition belongs to a different model")]
    ModelMismatch,

    #[error("{profiles} profiles exceed the enumeration limit of {limit}")]
    Capacity { profiles: u128, limit: u128 },

    #[error("invalid utility model: {0}")]
    InvalidUtility(String),

    #[error("invalid policy {0:?}")]
    InvalidPolicy(String),

    #[error("outcomes are completely separated by arrival time; no finite maximum-likelihood fit exists")]
    Separation,

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
}
