use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{deal, Action};
use crate::scoring::{round_cents, utility, Bankroll, CertaintyLevel};
use crate::sim::{Policy, SessionConfig};
use crate::time::ArrivalTime;

use super::protocol::{ErrorCode, FinishReason, PostGameAnswers, ProtocolError, ServerMessage};
use super::SessionId;

/// Time allowed for each of the two submissions.
pub const DECISION_MS: u64 = 61_000;
pub const CERTAINTY_MS: u64 = 61_000;
/// Results stay on screen this long before the next round is dealt.
pub const RESULTS_MS: u64 = 30_000;
/// Exposed to clients; not enforced by the service.
pub const INSTRUCTIONS_MS: u64 = 240_000;

pub const TIMEOUT_ACTION: Action = Action::Office;
pub const TIMEOUT_CERTAINTY: CertaintyLevel = CertaintyLevel::VeryUncertain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WaitingForPlayers,
    RoundDeciding,
    RoundCertainty,
    RoundResults,
    Finished,
}

impl Phase {
    /// Edges of `waiting -> (deciding -> certainty -> results)* -> finished`,
    /// where the last round's certainty step goes straight to finished.
    pub fn can_follow(self, prev: Phase) -> bool {
        use Phase::*;
        matches!(
            (prev, self),
            (WaitingForPlayers, RoundDeciding)
                | (RoundDeciding, RoundCertainty)
                | (RoundCertainty, RoundResults)
                | (RoundCertainty, Finished)
                | (RoundResults, RoundDeciding)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Occupant {
    Human { token: String },
    Bot(Policy),
}

impl Occupant {
    pub fn human(token: impl Into<String>) -> Self {
        Occupant::Human {
            token: token.into(),
        }
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, Occupant::Bot(_))
    }
}

#[derive(Debug, Clone)]
struct Seat {
    occupant: Option<Occupant>,
    connected: bool,
    arrival: Option<ArrivalTime>,
    decision: Option<Action>,
    certainty: Option<CertaintyLevel>,
    timed_out: bool,
    deadline: u64,
    bankroll: Bankroll,
    outbox: Vec<ServerMessage>,
    answers: Option<PostGameAnswers>,
}

impl Seat {
    fn new(endowment: f64) -> Self {
        Seat {
            occupant: None,
            connected: false,
            arrival: None,
            decision: None,
            certainty: None,
            timed_out: false,
            deadline: 0,
            bankroll: Bankroll(endowment),
            outbox: Vec::new(),
            answers: None,
        }
    }

    fn send(&mut self, msg: ServerMessage) {
        if matches!(self.occupant, Some(Occupant::Human { .. })) {
            self.outbox.push(msg);
        }
    }

    fn complete(&self) -> bool {
        self.decision.is_some() && self.certainty.is_some()
    }
}

/// One resolved round, both seats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u32,
    pub arrivals: [ArrivalTime; 2],
    pub actions: [Action; 2],
    pub certainty: [CertaintyLevel; 2],
    pub utilities: [f64; 2],
    pub bankrolls: [f64; 2],
    pub timed_out: [bool; 2],
}

/// Read-only view of a session for monitoring. Carries nothing a seat
/// could not already see in its own round results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub id: SessionId,
    pub phase: Phase,
    pub round: u32,
    pub max_rounds: u32,
    pub bankrolls: [f64; 2],
    pub occupied: [bool; 2],
    pub connected: [bool; 2],
    pub rounds_recorded: usize,
    pub finish_reason: Option<FinishReason>,
}

/// A two-seat game. Every mutation takes the current time in milliseconds
/// and first applies any deadline that has passed.
#[derive(Debug, Clone)]
pub struct Session {
    id: SessionId,
    cfg: SessionConfig,
    phase: Phase,
    round: u32,
    seats: [Seat; 2],
    rng: ChaCha8Rng,
    results_deadline: u64,
    records: Vec<RoundRecord>,
    finish_reason: Option<FinishReason>,
    illegal_transitions: u32,
}

fn seat_index(seat: u8) -> Result<usize, ProtocolError> {
    match seat {
        1 | 2 => Ok(usize::from(seat - 1)),
        _ => Err(ProtocolError::new(
            ErrorCode::UnknownSeat,
            format!("seat {seat} does not exist"),
        )),
    }
}

impl Session {
    pub fn new(id: SessionId, cfg: SessionConfig) -> Result<Self, ProtocolError> {
        cfg.validate()
            .map_err(|e| ProtocolError::new(ErrorCode::InvalidConfig, e.to_string()))?;
        Ok(Session {
            id,
            cfg,
            phase: Phase::WaitingForPlayers,
            round: 0,
            seats: [Seat::new(cfg.endowment), Seat::new(cfg.endowment)],
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            results_deadline: 0,
            records: Vec::new(),
            finish_reason: None,
            illegal_transitions: 0,
        })
    }

    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn finish_reason(&self) -> Option<FinishReason> {
        self.finish_reason
    }

    pub fn answers(&self, seat: u8) -> Option<&PostGameAnswers> {
        seat_index(seat)
            .ok()
            .and_then(|i| self.seats[i].answers.as_ref())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id,
            phase: self.phase,
            round: self.round,
            max_rounds: self.cfg.max_rounds,
            bankrolls: self.seats.each_ref().map(|s| s.bankroll.balance()),
            occupied: self.seats.each_ref().map(|s| s.occupant.is_some()),
            connected: self.seats.each_ref().map(|s| s.connected),
            rounds_recorded: self.records.len(),
            finish_reason: self.finish_reason,
        }
    }

    /// Drains the messages queued for a seat. Bots have no queue.
    pub fn take_messages(&mut self, seat: u8) -> Result<Vec<ServerMessage>, ProtocolError> {
        let i = seat_index(seat)?;
        Ok(std::mem::take(&mut self.seats[i].outbox))
    }

    fn set_phase(&mut self, next: Phase) {
        if !next.can_follow(self.phase) {
            self.illegal_transitions += 1;
        }
        self.phase = next;
    }

    /// Seats a human or a bot. A human may rejoin their own seat with the same
    /// token; the current round is then re-sent.
    pub fn join(&mut self, seat: u8, occupant: Occupant, now: u64) -> Result<(), ProtocolError> {
        let i = seat_index(seat)?;
        self.advance(now);
        match (&self.seats[i].occupant, &occupant) {
            (Some(Occupant::Human { token: held }), Occupant::Human { token }) if held == token => {
                self.seats[i].connected = true;
                self.send_joined(i);
                self.resend_round(i, now);
                return Ok(());
            }
            (Some(_), _) => {
                return Err(ProtocolError::new(
                    ErrorCode::SeatTaken,
                    format!("seat {seat} is taken"),
                ));
            }
            (None, _) if self.phase != Phase::WaitingForPlayers => {
                return Err(ProtocolError::new(
                    ErrorCode::WrongPhase,
                    "session already started",
                ));
            }
            (None, _) => {}
        }
        self.seats[i].connected = !occupant.is_bot();
        self.seats[i].occupant = Some(occupant);
        self.send_joined(i);
        if self.seats.iter().all(|s| s.occupant.is_some()) {
            self.deal_round(now);
        }
        Ok(())
    }

    /// Marks a human seat as disconnected. Deadlines keep running.
    pub fn disconnect(&mut self, seat: u8) -> Result<(), ProtocolError> {
        let i = seat_index(seat)?;
        self.seats[i].connected = false;
        Ok(())
    }

    fn send_joined(&mut self, i: usize) {
        let msg = ServerMessage::Joined {
            session: self.id,
            seat: i as u8 + 1,
            phase: self.phase,
        };
        self.seats[i].send(msg);
    }

    fn resend_round(&mut self, i: usize, now: u64) {
        let in_round = matches!(self.phase, Phase::RoundDeciding | Phase::RoundCertainty);
        let seat = &self.seats[i];
        if in_round && seat.decision.is_none() {
            let msg = ServerMessage::RoundStart {
                round: self.round,
                your_arrival: seat.arrival.expect("dealt"),
                deadline_ms: seat.deadline.saturating_sub(now),
            };
            self.seats[i].send(msg);
        }
    }

    /// Fails with `bad_token` unless `token` holds the human seat.
    pub fn check_token(&self, seat: u8, token: &str) -> Result<(), ProtocolError> {
        self.authorize(seat_index(seat)?, token)
    }

    fn authorize(&self, i: usize, token: &str) -> Result<(), ProtocolError> {
        match &self.seats[i].occupant {
            Some(Occupant::Human { token: held }) if held == token => Ok(()),
            _ => Err(ProtocolError::new(
                ErrorCode::BadToken,
                "token does not own this seat",
            )),
        }
    }

    pub fn submit_decision(
        &mut self,
        seat: u8,
        token: &str,
        action: Action,
        now: u64,
    ) -> Result<(), ProtocolError> {
        let i = seat_index(seat)?;
        self.authorize(i, token)?;
        let round = self.round;
        let before = self.seats[i].timed_out;
        self.advance(now);
        if self.round == round && self.seats[i].timed_out && !before {
            return Err(ProtocolError::new(
                ErrorCode::TooLate,
                "decision deadline passed; office recorded",
            ));
        }
        if !matches!(self.phase, Phase::RoundDeciding | Phase::RoundCertainty)
            || self.round != round
        {
            return Err(ProtocolError::new(
                ErrorCode::WrongPhase,
                "no decision is pending",
            ));
        }
        let s = &mut self.seats[i];
        if s.decision.is_some() {
            return Err(ProtocolError::new(
                ErrorCode::DuplicateSubmission,
                "decision already submitted",
            ));
        }
        s.decision = Some(action);
        s.deadline = now + CERTAINTY_MS;
        s.send(ServerMessage::Ack {
            of: "decision".into(),
            deadline_ms: Some(CERTAINTY_MS),
        });
        self.after_submission(now);
        Ok(())
    }

    pub fn submit_certainty(
        &mut self,
        seat: u8,
        token: &str,
        level: CertaintyLevel,
        now: u64,
    ) -> Result<(), ProtocolError> {
        let i = seat_index(seat)?;
        self.authorize(i, token)?;
        let round = self.round;
        let before = self.seats[i].timed_out;
        self.advance(now);
        if self.round == round && self.seats[i].timed_out && !before {
            return Err(ProtocolError::new(
                ErrorCode::TooLate,
                "certainty deadline passed; default recorded",
            ));
        }
        let in_round = matches!(self.phase, Phase::RoundDeciding | Phase::RoundCertainty)
            && self.round == round;
        let s = &mut self.seats[i];
        if !in_round || s.decision.is_none() {
            return Err(ProtocolError::new(
                ErrorCode::WrongPhase,
                "certainty follows the decision",
            ));
        }
        if s.certainty.is_some() {
            return Err(ProtocolError::new(
                ErrorCode::DuplicateSubmission,
                "certainty already submitted",
            ));
        }
        s.certainty = Some(level);
        s.send(ServerMessage::Ack {
            of: "certainty".into(),
            deadline_ms: None,
        });
        self.after_submission(now);
        Ok(())
    }

    /// Stores post-game answers once per seat, after the game has finished.
    pub fn submit_answers(
        &mut self,
        seat: u8,
        token: &str,
        answers: PostGameAnswers,
    ) -> Result<(), ProtocolError> {
        let i = seat_index(seat)?;
        self.authorize(i, token)?;
        if self.phase != Phase::Finished {
            return Err(ProtocolError::new(
                ErrorCode::WrongPhase,
                "questions follow the last round",
            ));
        }
        let s = &mut self.seats[i];
        if s.answers.is_some() {
            return Err(ProtocolError::new(
                ErrorCode::DuplicateSubmission,
                "answers already stored",
            ));
        }
        s.answers = Some(answers);
        s.send(ServerMessage::Ack {
            of: "post_game".into(),
            deadline_ms: None,
        });
        Ok(())
    }

    /// Applies every deadline up to `now`: timeout defaults, results
    /// auto-advance and the end of the game. Idempotent for a fixed `now`.
    pub fn advance(&mut self, now: u64) -> Phase {
        loop {
            match self.phase {
                Phase::WaitingForPlayers | Phase::Finished => break,
                Phase::RoundResults => {
                    if now < self.results_deadline {
                        break;
                    }
                    self.deal_round(self.results_deadline);
                }
                Phase::RoundDeciding | Phase::RoundCertainty => {
                    let mut latest = None;
                    for s in &mut self.seats {
                        if s.complete() || now < s.deadline {
                            continue;
                        }
                        if s.decision.is_none() {
                            s.decision = Some(TIMEOUT_ACTION);
                        }
                        s.certainty = Some(TIMEOUT_CERTAINTY);
                        s.timed_out = true;
                        latest = latest.max(Some(s.deadline));
                    }
                    match latest {
                        Some(at) => self.after_submission(at),
                        None => break,
                    }
                }
            }
        }
        self.phase
    }

    /// Earliest pending deadline, if any.
    pub fn next_deadline(&self) -> Option<u64> {
        match self.phase {
            Phase::RoundResults => Some(self.results_deadline),
            Phase::RoundDeciding | Phase::RoundCertainty => self
                .seats
                .iter()
                .filter(|s| !s.complete())
                .map(|s| s.deadline)
                .min(),
            _ => None,
        }
    }

    fn deal_round(&mut self, at: u64) {
        self.round += 1;
        let pair = deal(&self.cfg.range, &mut self.rng);
        let round = self.round;
        for (i, t) in [pair.t1, pair.t2].into_iter().enumerate() {
            let s = &mut self.seats[i];
            s.arrival = Some(t);
            s.decision = None;
            s.certainty = None;
            s.timed_out = false;
            s.deadline = at + DECISION_MS;
            s.send(ServerMessage::RoundStart {
                round,
                your_arrival: t,
                deadline_ms: DECISION_MS,
            });
        }
        self.set_phase(Phase::RoundDeciding);
        for i in 0..2 {
            if let Some(Occupant::Bot(policy)) = &self.seats[i].occupant {
                let own = if i == 0 { pair.t1 } else { pair.t2 };
                let (action, level) = policy.decide(own, &mut self.rng);
                self.seats[i].decision = Some(action);
                self.seats[i].certainty = Some(level);
            }
        }
        self.after_submission(at);
    }

    fn after_submission(&mut self, at: u64) {
        if self.phase == Phase::RoundDeciding && self.seats.iter().all(|s| s.decision.is_some()) {
            self.set_phase(Phase::RoundCertainty);
        }
        if self.phase == Phase::RoundCertainty && self.seats.iter().all(Seat::complete) {
            self.resolve(at);
        }
    }

    fn resolve(&mut self, at: u64) {
        let arrivals = self.seats.each_ref().map(|s| s.arrival.expect("dealt"));
        let actions = self.seats.each_ref().map(|s| s.decision.expect("complete"));
        let certainty = self
            .seats
            .each_ref()
            .map(|s| s.certainty.expect("complete"));
        let utilities = [
            utility(
                certainty[0],
                actions[0],
                actions[1],
                arrivals[0],
                arrivals[1],
            ),
            utility(
                certainty[1],
                actions[1],
                actions[0],
                arrivals[1],
                arrivals[0],
            ),
        ];
        let mut ruined = false;
        for (s, u) in self.seats.iter_mut().zip(utilities) {
            let (b, r) = s.bankroll.apply_round(u);
            s.bankroll = b;
            ruined |= r;
        }
        let bankrolls = self.seats.each_ref().map(|s| s.bankroll.balance());
        self.records.push(RoundRecord {
            round: self.round,
            arrivals,
            actions,
            certainty,
            utilities,
            bankrolls,
            timed_out: self.seats.each_ref().map(|s| s.timed_out),
        });
        for i in 0..2 {
            let msg = ServerMessage::RoundResult {
                round: self.round,
                arrivals,
                actions,
                your_certainty: certainty[i],
                your_penalty: round_cents(utilities[i]),
                bankrolls: bankrolls.map(round_cents),
            };
            self.seats[i].send(msg);
        }

        let reason = if ruined {
            Some(FinishReason::Ruin)
        } else if self.round >= self.cfg.max_rounds {
            Some(FinishReason::Completed)
        } else {
            None
        };
        match reason {
            Some(reason) => {
                self.finish_reason = Some(reason);
                self.set_phase(Phase::Finished);
                for s in &mut self.seats {
                    let final_bonus = round_cents(s.bankroll.balance().max(0.0));
                    s.send(ServerMessage::GameOver {
                        reason,
                        final_bonus,
                    });
                }
            }
            None => {
                self.results_deadline = at + RESULTS_MS;
                self.set_phase(Phase::RoundResults);
            }
        }
    }

    /// Structural invariants, for property tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.illegal_transitions > 0 {
            return Err(format!(
                "{} illegal phase transitions",
                self.illegal_transitions
            ));
        }
        if self.round > self.cfg.max_rounds {
            return Err(format!(
                "round {} beyond {}",
                self.round, self.cfg.max_rounds
            ));
        }
        let resolved = self.records.len() as u32;
        let expected = match self.phase {
            Phase::WaitingForPlayers => 0,
            Phase::RoundDeciding | Phase::RoundCertainty => self.round - 1,
            Phase::RoundResults | Phase::Finished => self.round,
        };
        if resolved != expected {
            return Err(format!(
                "{resolved} records in {:?} of round {}",
                self.phase, self.round
            ));
        }
        if self.phase == Phase::WaitingForPlayers && self.round != 0 {
            return Err("waiting after the game started".into());
        }
        if self.phase != Phase::WaitingForPlayers && self.seats.iter().any(|s| s.occupant.is_none())
        {
            return Err("started with an empty seat".into());
        }
        if (self.phase == Phase::Finished) != self.finish_reason.is_some() {
            return Err("finish reason out of sync".into());
        }
        let mut prev = [self.cfg.endowment; 2];
        for r in &self.records {
            for (p, b) in prev.iter_mut().zip(r.bankrolls) {
                if b > *p {
                    return Err(format!("bankroll rose in round {}", r.round));
                }
                *p = b;
            }
        }
        if self.phase == Phase::RoundCertainty && self.seats.iter().any(|s| s.decision.is_none()) {
            return Err("certainty phase with a missing decision".into());
        }
        Ok(())
    }
}
