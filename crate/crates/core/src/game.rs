//! The arrival-pair game: nature's moves, actions, forbidden choices and the
//! split of the pair set into two independent subgames.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::time::{ArrivalTime, TimeRange, STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Canteen,
    Office,
}

impl Action {
    /// Numeric encoding used by the payoff formula: canteen 0, office 1.
    pub fn code(self) -> u8 {
        match self {
            Action::Canteen => 0,
            Action::Office => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Canteen => "canteen",
            Action::Office => "office",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "canteen" | "c" => Ok(Action::Canteen),
            "office" | "o" => Ok(Action::Office),
            other => Err(Error::InvalidConfig(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

/// Nature's move: the two arrival times, ten minutes apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArrivalPair {
    pub t1: ArrivalTime,
    pub t2: ArrivalTime,
}

impl ArrivalPair {
    pub fn new(t1: ArrivalTime, t2: ArrivalTime) -> Self {
        ArrivalPair { t1, t2 }
    }

    pub fn own(&self, player: Player) -> ArrivalTime {
        match player {
            Player::One => self.t1,
            Player::Two => self.t2,
        }
    }

    /// `(t1, t2) -> (t2, t1)`.
    pub fn mirror(&self) -> Self {
        ArrivalPair {
            t1: self.t2,
            t2: self.t1,
        }
    }

    pub fn earlier(&self) -> ArrivalTime {
        self.t1.min(self.t2)
    }

    pub fn later(&self) -> ArrivalTime {
        self.t1.max(self.t2)
    }

    /// Both arrivals strictly before 9:00.
    pub fn both_before_nine(&self) -> bool {
        self.t1.is_before_nine() && self.t2.is_before_nine()
    }

    /// `t ∼_player t'` iff the player's own arrivals coincide.
    pub fn indistinguishable(&self, other: &ArrivalPair, player: Player) -> bool {
        self.own(player) == other.own(player)
    }

    pub fn is_valid_in(&self, range: &TimeRange) -> bool {
        range.contains(self.t1)
            && range.contains(self.t2)
            && (self.t1.minutes() - self.t2.minutes()).abs() == STEP
    }
}

impl fmt::Display for ArrivalPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.t1, self.t2)
    }
}

/// All arrival pairs of the range, in lexicographic order.
pub fn arrival_pairs(range: &TimeRange) -> Vec<ArrivalPair> {
    let mut pairs: Vec<ArrivalPair> = range
        .times()
        .flat_map(|t| {
            [t.offset(-STEP), t.offset(STEP)]
                .into_iter()
                .filter(|u| range.contains(*u))
                .map(move |u| ArrivalPair::new(t, u))
        })
        .collect();
    pairs.sort();
    pairs
}

/// Draws one arrival pair uniformly.
pub fn deal<R: Rng + ?Sized>(range: &TimeRange, rng: &mut R) -> ArrivalPair {
    let pairs = arrival_pairs(range);
    pairs[rng.random_range(0..pairs.len())]
}

/// Canteen at 9:00 or later.
pub fn is_forbidden(t: ArrivalTime, action: Action) -> bool {
    action == Action::Canteen && !t.is_before_nine()
}

/// The two connected components of the pair set under `∼1 ∪ ∼2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgamePartition {
    /// Component holding `(tmin, tmin + 10)`; each list is in chain order.
    pub first: Vec<ArrivalPair>,
    pub second: Vec<ArrivalPair>,
}

impl SubgamePartition {
    pub fn components(&self) -> [&[ArrivalPair]; 2] {
        [&self.first, &self.second]
    }

    /// Which component a pair belongs to (0 or 1).
    pub fn component_of(&self, pair: &ArrivalPair) -> Option<usize> {
        if self.first.contains(pair) {
            Some(0)
        } else if self.second.contains(pair) {
            Some(1)
        } else {
            None
        }
    }
}

/// Splits the arrival pairs into connected components by graph search.
pub fn components(range: &TimeRange) -> SubgamePartition {
    let pairs = arrival_pairs(range);
    let mut seen = vec![false; pairs.len()];
    let mut found: Vec<Vec<ArrivalPair>> = Vec::new();

    for start in 0..pairs.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = BTreeSet::new();
        while let Some(i) = queue.pop_front() {
            members.insert(i);
            for (j, other) in pairs.iter().enumerate() {
                if !seen[j]
                    && Player::BOTH
                        .iter()
                        .any(|&p| pairs[i].indistinguishable(other, p))
                {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let mut chain: Vec<ArrivalPair> = members.into_iter().map(|i| pairs[i]).collect();
        chain.sort_by_key(|p| (p.earlier(), p.later()));
        found.push(chain);
    }

    assert_eq!(
        found.len(),
        2,
        "the arrival-pair graph always splits into two chains"
    );
    let second = found.pop().unwrap();
    let first = found.pop().unwrap();
    SubgamePartition { first, second }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hm(h: i32, m: i32) -> ArrivalTime {
        ArrivalTime::hm(h, m)
    }

    fn pair(a: (i32, i32), b: (i32, i32)) -> ArrivalPair {
        ArrivalPair::new(hm(a.0, a.1), hm(b.0, b.1))
    }

    #[test]
    fn pair_counts() {
        assert_eq!(arrival_pairs(&TimeRange::analysis()).len(), 12);
        assert_eq!(arrival_pairs(&TimeRange::live()).len(), 14);
        let smallest = TimeRange::parse("8:50", "9:00").unwrap();
        assert_eq!(
            arrival_pairs(&smallest),
            vec![pair((8, 50), (9, 0)), pair((9, 0), (8, 50))]
        );
    }

    #[test]
    fn pairs_are_sorted_and_valid() {
        let range = TimeRange::live();
        let pairs = arrival_pairs(&range);
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        assert!(pairs.iter().all(|p| p.is_valid_in(&range)));
    }

    #[test]
    fn forbidden_moves() {
        assert!(is_forbidden(hm(9, 0), Action::Canteen));
        assert!(!is_forbidden(hm(8, 50), Action::Canteen));
        assert!(!is_forbidden(hm(9, 10), Action::Office));
    }

    #[test]
    fn deal_is_seed_deterministic() {
        let range = TimeRange::analysis();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| deal(&range, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
        let all = arrival_pairs(&range);
        assert!(draw(3).iter().all(|p| all.contains(p)));
    }

    #[test]
    fn deal_is_uniform() {
        let range = TimeRange::analysis();
        let pairs = arrival_pairs(&range);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 120_000;
        let mut counts = vec![0usize; pairs.len()];
        for _ in 0..n {
            let p = deal(&range, &mut rng);
            counts[pairs.binary_search(&p).unwrap()] += 1;
        }
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 1.0 / 12.0).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn analysis_components_match_closed_form() {
        let range = TimeRange::analysis();
        let parts = components(&range);
        // (8:10 + 20x, 8:20 + 20y) with y <= x <= y + 1
        let mut closed: Vec<ArrivalPair> = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                if y <= x && x <= y + 1 {
                    let p = ArrivalPair::new(hm(8, 10).offset(20 * x), hm(8, 20).offset(20 * y));
                    if p.is_valid_in(&range) {
                        closed.push(p);
                    }
                }
            }
        }
        let mut first = parts.first.clone();
        first.sort();
        closed.sort();
        assert_eq!(first, closed);
        assert_eq!(
            parts.first,
            vec![
                pair((8, 10), (8, 20)),
                pair((8, 30), (8, 20)),
                pair((8, 30), (8, 40)),
                pair((8, 50), (8, 40)),
                pair((8, 50), (9, 0)),
                pair((9, 10), (9, 0)),
            ]
        );
    }

    #[test]
    fn components_are_mirror_chains() {
        for tmin in (0..=50).step_by(10) {
            for tmax in (60..=100).step_by(10) {
                let range = TimeRange::new(
                    ArrivalTime::from_minutes(tmin).unwrap(),
                    ArrivalTime::from_minutes(tmax).unwrap(),
                )
                .unwrap();
                let parts = components(&range);
                let total = parts.first.len() + parts.second.len();
                assert_eq!(total, arrival_pairs(&range).len());
                assert_eq!(total, 2 * ((tmax - tmin) / 10) as usize);
                for chain in parts.components() {
                    for w in chain.windows(2) {
                        assert!(
                            w[0].indistinguishable(&w[1], Player::One)
                                || w[0].indistinguishable(&w[1], Player::Two)
                        );
                    }
                }
                for a in &parts.first {
                    assert!(parts.second.contains(&a.mirror()));
                    for b in &parts.second {
                        assert!(!a.indistinguishable(b, Player::One));
                        assert!(!a.indistinguishable(b, Player::Two));
                    }
                }
            }
        }
    }

    #[test]
    fn indistinguishability_classes_are_small() {
        let pairs = arrival_pairs(&TimeRange::live());
        for p in &pairs {
            for player in Player::BOTH {
                let class = pairs
                    .iter()
                    .filter(|q| p.indistinguishable(q, player))
                    .count();
                assert!((1..=2).contains(&class));
            }
        }
    }
}
