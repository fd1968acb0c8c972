//! Analysis and simulation toolkit for the two-player canteen coordination
//! game: payoffs, the knowledge structure of noisy arrival times, exhaustive
//! strategy analysis, simulated play and a live two-seat session service.

pub mod epistemic;
pub mod error;
pub mod game;
pub mod logit;
pub mod scoring;
pub mod session;
pub mod sim;
pub mod strategy;
pub mod time;

pub use error::{Error, Result};
pub use game::{Action, ArrivalPair, Player};
pub use scoring::{utility, Bankroll, CertaintyLevel};
pub use time::{ArrivalTime, ClockTime, TimeRange};
