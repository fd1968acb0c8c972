//! JSONL export of finished rounds and an independent replay check.
//!
//! One record per seat per round. The leading fields follow the public
//! dataset layout (`session, code, group, id_in_group, round, arrival,
//! choice, certainty, bonus, payoff`); `bonus` and `payoff` are rounded to
//! cents, and the unrounded values follow so a replay can compare exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::game::Action;
use crate::scoring::{round_cents, utility, CertaintyLevel};
use crate::time::ArrivalTime;

use super::protocol::{CutoffAnswer, FaultAnswer, SimpleAnswer};
use super::state::Session;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session: String,
    pub code: String,
    pub group: u32,
    pub id_in_group: u8,
    pub round: u32,
    pub arrival: ArrivalTime,
    pub choice: Action,
    pub certainty: CertaintyLevel,
    pub bonus: f64,
    pub payoff: f64,
    pub bonus_exact: f64,
    pub payoff_exact: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simple: Option<SimpleAnswer>,
}

/// Records for every resolved round, ordered by round then seat. A session
/// that never started has none.
pub fn log_records(session: &Session) -> Vec<LogRecord> {
    let name = session.id().to_string();
    let mut out = Vec::with_capacity(2 * session.records().len());
    for r in session.records() {
        for i in 0..2 {
            let seat = i as u8 + 1;
            let answers = session.answers(seat).cloned().unwrap_or_default();
            out.push(LogRecord {
                session: name.clone(),
                code: format!("{name}-p{seat}"),
                group: 1,
                id_in_group: seat,
                round: r.round,
                arrival: r.arrivals[i],
                choice: r.actions[i],
                certainty: r.certainty[i],
                bonus: round_cents(r.utilities[i]),
                payoff: round_cents(r.bankrolls[i]),
                bonus_exact: r.utilities[i],
                payoff_exact: r.bankrolls[i],
                fault: answers.fault,
                strategy: answers.strategy,
                cutoff: answers.cutoff,
                simple: answers.simple,
            });
        }
    }
    out
}

pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSONL, skipping blank lines. Errors carry the 1-based line number.
pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", n + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayIssue {
    pub session: String,
    pub round: u32,
    pub seat: Option<u8>,
    pub detail: String,
}

impl fmt::Display for ReplayIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seat {
            Some(seat) => write!(
                f,
                "{} round {} seat {}: {}",
                self.session, self.round, seat, self.detail
            ),
            None => write!(f, "{} round {}: {}", self.session, self.round, self.detail),
        }
    }
}

/// Recomputes every penalty and running bonus from the logged arrivals,
/// choices and certainty levels. An empty result means the log verifies.
pub fn replay(records: &[LogRecord], endowment: f64) -> Vec<ReplayIssue> {
    let mut by_session: BTreeMap<&str, BTreeMap<u32, Vec<&LogRecord>>> = BTreeMap::new();
    for r in records {
        by_session
            .entry(&r.session)
            .or_default()
            .entry(r.round)
            .or_default()
            .push(r);
    }

    let mut issues = Vec::new();
    for (session, rounds) in by_session {
        let mut issue = |round, seat, detail: String| {
            issues.push(ReplayIssue {
                session: session.to_string(),
                round,
                seat,
                detail,
            });
        };
        let mut bankroll = [endowment; 2];
        let mut expected_round = 1;
        for (round, mut rows) in rounds {
            if bankroll.iter().any(|b| *b <= 0.0) {
                issue(round, None, "round played after ruin".into());
            }
            if round != expected_round {
                issue(round, None, format!("expected round {expected_round}"));
            }
            expected_round = round + 1;
            rows.sort_by_key(|r| r.id_in_group);
            let seats: Vec<u8> = rows.iter().map(|r| r.id_in_group).collect();
            if seats != [1, 2] {
                issue(round, None, format!("seats {seats:?} instead of [1, 2]"));
                continue;
            }
            let (a, b) = (rows[0], rows[1]);
            let pair_ok = (a.arrival.minutes() - b.arrival.minutes()).abs() == 10;
            if !pair_ok {
                issue(
                    round,
                    None,
                    format!(
                        "arrivals {} and {} are not 10 minutes apart",
                        a.arrival, b.arrival
                    ),
                );
            }
            for (i, (me, other)) in [(a, b), (b, a)].into_iter().enumerate() {
                let u = utility(
                    me.certainty,
                    me.choice,
                    other.choice,
                    me.arrival,
                    other.arrival,
                );
                let next = bankroll[i] + u;
                let seat = Some(me.id_in_group);
                if me.bonus_exact != u {
                    issue(
                        round,
                        seat,
                        format!("bonus_exact {} != recomputed {u}", me.bonus_exact),
                    );
                }
                if me.bonus != round_cents(u) {
                    issue(
                        round,
                        seat,
                        format!("bonus {} != recomputed {:.2}", me.bonus, round_cents(u)),
                    );
                }
                if me.payoff_exact != next {
                    issue(
                        round,
                        seat,
                        format!("payoff_exact {} != recomputed {next}", me.payoff_exact),
                    );
                }
                if me.payoff != round_cents(next) {
                    issue(
                        round,
                        seat,
                        format!(
                            "payoff {} != recomputed {:.2}",
                            me.payoff,
                            round_cents(next)
                        ),
                    );
                }
                bankroll[i] = next;
            }
        }
    }
    issues
}
