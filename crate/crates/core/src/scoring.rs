//! Logarithmic-scoring penalties, the certainty grid and bankroll dynamics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::game::{is_forbidden, Action};
use crate::time::ArrivalTime;

/// The five-point certainty scale and its numeric probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertaintyLevel {
    VeryUncertain,
    SlightlyCertain,
    SomewhatCertain,
    QuiteCertain,
    VeryCertain,
}

impl CertaintyLevel {
    pub const ALL: [CertaintyLevel; 5] = [
        CertaintyLevel::VeryUncertain,
        CertaintyLevel::SlightlyCertain,
        CertaintyLevel::SomewhatCertain,
        CertaintyLevel::QuiteCertain,
        CertaintyLevel::VeryCertain,
    ];

    pub fn value(self) -> f64 {
        match self {
            CertaintyLevel::VeryUncertain => 0.5,
            CertaintyLevel::SlightlyCertain => 0.625,
            CertaintyLevel::SomewhatCertain => 0.75,
            CertaintyLevel::QuiteCertain => 0.875,
            CertaintyLevel::VeryCertain => 0.99,
        }
    }

    /// Inverse of [`value`](Self::value); exact grid values only.
    pub fn from_value(e: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.value() == e)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CertaintyLevel::VeryUncertain => "very_uncertain",
            CertaintyLevel::SlightlyCertain => "slightly_certain",
            CertaintyLevel::SomewhatCertain => "somewhat_certain",
            CertaintyLevel::QuiteCertain => "quite_certain",
            CertaintyLevel::VeryCertain => "very_certain",
        }
    }

    /// Wording shown to participants.
    pub fn label(self) -> &'static str {
        match self {
            CertaintyLevel::VeryUncertain => "very uncertain",
            CertaintyLevel::SlightlyCertain => "slightly certain",
            CertaintyLevel::SomewhatCertain => "somewhat certain",
            CertaintyLevel::QuiteCertain => "quite certain",
            CertaintyLevel::VeryCertain => "very certain",
        }
    }
}

impl fmt::Display for CertaintyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertaintyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s || l.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown certainty level {s:?}")))
    }
}

/// One player's utility for a round.
///
/// A forbidden choice by either player (canteen at 9:00 or later) scores as a
/// miscoordination, `2 ln(1 - e)`. Otherwise
/// `(1 - |a - b| + a b) ln e + 2 |a - b| ln(1 - e)` with canteen = 0, office = 1.
pub fn utility(
    e: CertaintyLevel,
    a_self: Action,
    a_other: Action,
    t_self: ArrivalTime,
    t_other: ArrivalTime,
) -> f64 {
    let e = e.value();
    if is_forbidden(t_self, a_self) || is_forbidden(t_other, a_other) {
        return 2.0 * (1.0 - e).ln();
    }
    let a = f64::from(a_self.code());
    let b = f64::from(a_other.code());
    let differ = (a - b).abs();
    (1.0 - differ + a * b) * e.ln() + 2.0 * differ * (1.0 - e).ln()
}

/// Ratio of the miscoordination penalty to the canteen-coordination penalty.
pub fn penalty_ratio(e: CertaintyLevel) -> f64 {
    let e = e.value();
    (2.0 * (1.0 - e).ln()).abs() / e.ln().abs()
}

/// Expected utility of reporting `e` when the co-player matches with
/// probability `q`.
pub fn expected_report_utility(e: CertaintyLevel, q: f64, action: Action, t: ArrivalTime) -> f64 {
    let v = e.value();
    let miss = 2.0 * (1.0 - v).ln();
    if is_forbidden(t, action) {
        return miss;
    }
    let hit = match action {
        Action::Canteen => v.ln(),
        Action::Office => 2.0 * v.ln(),
    };
    q * hit + (1.0 - q) * miss
}

/// The grid report maximizing expected utility under belief `q`.
///
/// Ties go to the lower certainty. Canteen coordination is rewarded with only
/// a single `ln e`, so the canteen branch under-reports relative to `q`.
pub fn best_report(q: f64, action: Action, t: ArrivalTime) -> CertaintyLevel {
    assert!((0.0..=1.0).contains(&q), "belief must be a probability");
    let mut best = CertaintyLevel::VeryUncertain;
    let mut best_eu = expected_report_utility(best, q, action, t);
    for level in &CertaintyLevel::ALL[1..] {
        let eu = expected_report_utility(*level, q, action, t);
        if eu > best_eu {
            best = *level;
            best_eu = eu;
        }
    }
    best
}

/// Rounds dollars to cents for display.
pub fn round_cents(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// A player's remaining bonus, kept at full precision.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Bankroll(pub f64);

impl Bankroll {
    pub fn balance(self) -> f64 {
        self.0
    }

    pub fn is_ruined(self) -> bool {
        self.0 <= 0.0
    }

    /// Adds a (non-positive) round utility; reports ruin at `<= 0`.
    pub fn apply_round(self, utility: f64) -> (Bankroll, bool) {
        let next = Bankroll(self.0 + utility);
        (next, next.is_ruined())
    }
}
