//! Uniform strategies, expected utility, safety and exhaustive Pareto
//! analysis of the arrival-pair game.
//!
//! Brute-force enumeration is the ground truth here. The structural results
//! (no canteen at 9:00 or later, no office-then-canteen step, only all-office
//! or cut-off 8:55 can be optimal) are reported as flags checked against the
//! enumerated front, never assumed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{arrival_pairs, components, is_forbidden, Action, ArrivalPair, Player};
use crate::scoring::{utility, CertaintyLevel};
use crate::time::{ArrivalTime, ClockTime, TimeRange, NINE_AM, STEP};

/// Largest number of full profiles `pareto_front` will enumerate.
pub const MAX_PROFILES: u128 = 1 << 24;

/// Relative tolerance when grouping equal expected utilities.
const EU_TIE: f64 = 1e-12;

/// A uniform strategy: one action per own arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    range: TimeRange,
    /// Bit `i` set means canteen at the `i`-th grid time.
    canteen: u64,
}

fn check_grid(range: &TimeRange) {
    assert!(
        range.len() <= 64,
        "strategies support at most 64 grid times"
    );
}

impl Strategy {
    pub fn from_fn(range: &TimeRange, f: impl Fn(ArrivalTime) -> Action) -> Self {
        check_grid(range);
        let canteen = range
            .times()
            .enumerate()
            .filter(|(_, t)| f(*t) == Action::Canteen)
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Strategy {
            range: *range,
            canteen,
        }
    }

    /// Builds from a canteen bitmask over grid indices.
    pub fn from_mask(range: &TimeRange, canteen: u64) -> Self {
        check_grid(range);
        let valid = if range.len() == 64 {
            u64::MAX
        } else {
            (1u64 << range.len()) - 1
        };
        Strategy {
            range: *range,
            canteen: canteen & valid,
        }
    }

    pub fn all_office(range: &TimeRange) -> Self {
        Self::from_mask(range, 0)
    }

    /// Canteen strictly before `cutoff`, office strictly after.
    pub fn cutoff(range: &TimeRange, cutoff: ClockTime) -> Self {
        Self::from_fn(range, |t| {
            if t.minutes() < cutoff.minutes() {
                Action::Canteen
            } else {
                Action::Office
            }
        })
    }

    /// The cut-off strategy with cut-off 8:55.
    pub fn canteen_before_nine(range: &TimeRange) -> Self {
        Self::cutoff(range, ClockTime::hm(8, 55))
    }

    pub fn range(&self) -> TimeRange {
        self.range
    }

    pub fn mask(&self) -> u64 {
        self.canteen
    }

    pub fn action(&self, t: ArrivalTime) -> Action {
        let index = self
            .range()
            .index_of(t)
            .expect("arrival time outside the strategy's range");
        if self.canteen >> index & 1 == 1 {
            Action::Canteen
        } else {
            Action::Office
        }
    }

    pub fn classify(&self) -> Classification {
        classify(self)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = self.range();
        for t in range.times() {
            f.write_str(if self.action(t) == Action::Canteen {
                "c"
            } else {
                "o"
            })?;
        }
        Ok(())
    }
}

/// Cut-off structure of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Canteen before the threshold, office after it. All-office reports a
    /// threshold five minutes before the earliest arrival.
    Cutoff(ClockTime),
    NonCutoff,
}

pub fn classify(s: &Strategy) -> Classification {
    let range = s.range();
    let actions: Vec<Action> = range.times().map(|t| s.action(t)).collect();
    let canteen_run = actions
        .iter()
        .take_while(|a| **a == Action::Canteen)
        .count();
    if actions[canteen_run..].contains(&Action::Canteen) {
        return Classification::NonCutoff;
    }
    // threshold halfway between the last canteen time and the first office time
    let last_canteen = range.tmin().minutes() + (canteen_run as i32 - 1) * STEP;
    Classification::Cutoff(ClockTime::from_minutes(last_canteen + STEP / 2))
}

impl Classification {
    pub fn is_all_office(&self, range: &TimeRange) -> bool {
        matches!(self, Classification::Cutoff(c) if c.minutes() < range.tmin().minutes())
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Cutoff(c) => write!(f, "cutoff:{c}"),
            Classification::NonCutoff => f.write_str("non_cutoff"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyProfile {
    pub s1: Strategy,
    pub s2: Strategy,
}

impl StrategyProfile {
    pub fn new(s1: Strategy, s2: Strategy) -> Self {
        assert_eq!(
            s1.range, s2.range,
            "both strategies must cover the same range"
        );
        StrategyProfile { s1, s2 }
    }

    pub fn symmetric(s: Strategy) -> Self {
        StrategyProfile { s1: s, s2: s }
    }

    pub fn all_office(range: &TimeRange) -> Self {
        Self::symmetric(Strategy::all_office(range))
    }

    pub fn cutoff(range: &TimeRange, cutoff: ClockTime) -> Self {
        Self::symmetric(Strategy::cutoff(range, cutoff))
    }

    pub fn range(&self) -> TimeRange {
        self.s1.range()
    }

    pub fn strategy(&self, player: Player) -> &Strategy {
        match player {
            Player::One => &self.s1,
            Player::Two => &self.s2,
        }
    }

    /// `s(t) = (s1(t1), s2(t2))`.
    pub fn actions(&self, pair: &ArrivalPair) -> (Action, Action) {
        (self.s1.action(pair.t1), self.s2.action(pair.t2))
    }

    /// Player roles exchanged.
    pub fn swapped(&self) -> Self {
        StrategyProfile {
            s1: self.s2,
            s2: self.s1,
        }
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.s1, self.s2)
    }
}

/// Common payoffs for one arrival pair. For pairs with an arrival at or after
/// 9:00 every canteen-involving outcome pays `miscoordination`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPayoffs {
    pub canteen: f64,
    pub office: f64,
    pub miscoordination: f64,
}

impl PairPayoffs {
    fn value(&self, pair: &ArrivalPair, a1: Action, a2: Action) -> f64 {
        match (a1, a2) {
            (Action::Office, Action::Office) => self.office,
            (Action::Canteen, Action::Canteen) if pair.both_before_nine() => self.canteen,
            _ => self.miscoordination,
        }
    }

    fn satisfies_constraints(&self, pair: &ArrivalPair) -> bool {
        if pair.both_before_nine() {
            self.canteen > self.office && self.office > self.miscoordination
        } else {
            self.office > self.miscoordination
        }
    }
}

/// Payoff backend for expected-utility computations.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityModel {
    /// The same ordered constants at every pair.
    Abstract(PairPayoffs),
    /// Constants per arrival pair.
    PerPair(BTreeMap<ArrivalPair, PairPayoffs>),
    /// Log scoring with every report fixed at one certainty level.
    Concrete { certainty: CertaintyLevel },
}

impl Default for UtilityModel {
    fn default() -> Self {
        UtilityModel::Concrete {
            certainty: CertaintyLevel::VeryCertain,
        }
    }
}

impl UtilityModel {
    pub fn abstract_values(canteen: f64, office: f64, miscoordination: f64) -> Self {
        UtilityModel::Abstract(PairPayoffs {
            canteen,
            office,
            miscoordination,
        })
    }

    /// Common payoff of the pair under the given actions.
    pub fn payoff(&self, pair: &ArrivalPair, a1: Action, a2: Action) -> f64 {
        match self {
            UtilityModel::Abstract(p) => p.value(pair, a1, a2),
            UtilityModel::PerPair(map) => map
                .get(pair)
                .unwrap_or_else(|| panic!("no payoffs for pair {pair}"))
                .value(pair, a1, a2),
            UtilityModel::Concrete { certainty } => utility(*certainty, a1, a2, pair.t1, pair.t2),
        }
    }

    /// Checks the payoff ordering constraints at every pair of the range.
    pub fn satisfies_constraints(&self, range: &TimeRange) -> bool {
        use Action::*;
        arrival_pairs(range).iter().all(|pair| {
            let u = |a, b| self.payoff(pair, a, b);
            if pair.both_before_nine() {
                u(Canteen, Canteen) > u(Office, Office)
                    && u(Office, Office) > u(Canteen, Office)
                    && u(Canteen, Office) == u(Office, Canteen)
            } else {
                u(Office, Office) > u(Canteen, Office)
                    && u(Canteen, Office) == u(Office, Canteen)
                    && u(Office, Canteen) == u(Canteen, Canteen)
            }
        })
    }

    pub fn validate(&self, range: &TimeRange) -> Result<()> {
        match self {
            UtilityModel::Abstract(p)
                if !arrival_pairs(range)
                    .iter()
                    .all(|t| p.satisfies_constraints(t)) =>
            {
                Err(Error::InvalidUtility(format!(
                    "{p:?} violates the payoff ordering"
                )))
            }
            UtilityModel::PerPair(map) => {
                for pair in arrival_pairs(range) {
                    let p = map
                        .get(&pair)
                        .ok_or_else(|| Error::InvalidUtility(format!("no payoffs for {pair}")))?;
                    if !p.satisfies_constraints(&pair) {
                        return Err(Error::InvalidUtility(format!(
                            "{p:?} at {pair} violates the ordering"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Three descending negative constants shared by all pairs.
    pub fn random_abstract<R: Rng + ?Sized>(rng: &mut R) -> Self {
        UtilityModel::Abstract(random_payoffs(rng))
    }

    /// Independently drawn ordered constants for each pair.
    pub fn random_per_pair<R: Rng + ?Sized>(range: &TimeRange, rng: &mut R) -> Self {
        UtilityModel::PerPair(
            arrival_pairs(range)
                .into_iter()
                .map(|p| (p, random_payoffs(rng)))
                .collect(),
        )
    }
}

fn random_payoffs<R: Rng + ?Sized>(rng: &mut R) -> PairPayoffs {
    loop {
        let mut v = [
            rng.random_range(-10.0..0.0),
            rng.random_range(-10.0..0.0),
            rng.random_range(-10.0..0.0),
        ];
        v.sort_by(|a: &f64, b| b.total_cmp(a));
        if v[0] > v[1] && v[1] > v[2] {
            return PairPayoffs {
                canteen: v[0],
                office: v[1],
                miscoordination: v[2],
            };
        }
    }
}

/// `EU(s) = 1/|T| Σ_t u_t(s(t))`.
pub fn expected_utility(profile: &StrategyProfile, range: &TimeRange, model: &UtilityModel) -> f64 {
    mean_utility(profile, &arrival_pairs(range), model)
}

/// Mean payoff over a subset of arrival pairs.
pub fn mean_utility(profile: &StrategyProfile, pairs: &[ArrivalPair], model: &UtilityModel) -> f64 {
    sum_utility(profile, pairs, model) / pairs.len() as f64
}

fn sum_utility(profile: &StrategyProfile, pairs: &[ArrivalPair], model: &UtilityModel) -> f64 {
    pairs
        .iter()
        .map(|pair| {
            let (a1, a2) = profile.actions(pair);
            model.payoff(pair, a1, a2)
        })
        .sum()
}

/// No pair leads to miscoordination or a forbidden canteen choice.
pub fn is_safe(profile: &StrategyProfile, range: &TimeRange) -> bool {
    arrival_pairs(range).iter().all(|pair| {
        let (a1, a2) = profile.actions(pair);
        a1 == a2 && !is_forbidden(pair.t1, a1) && !is_forbidden(pair.t2, a2)
    })
}

/// Every profile of the range, player-one mask major.
pub fn all_profiles(range: &TimeRange) -> Result<impl Iterator<Item = StrategyProfile> + '_> {
    let count = profile_count(range);
    if count > MAX_PROFILES {
        return Err(Error::Capacity {
            profiles: count,
            limit: MAX_PROFILES,
        });
    }
    let n = 1u64 << range.len();
    Ok((0..n).flat_map(move |m1| {
        (0..n).map(move |m2| {
            StrategyProfile::new(
                Strategy::from_mask(range, m1),
                Strategy::from_mask(range, m2),
            )
        })
    }))
}

pub fn profile_count(range: &TimeRange) -> u128 {
    1u128
        .checked_shl(2 * range.len() as u32)
        .unwrap_or(u128::MAX)
}

/// A profile restricted to the grid slots that occur in one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestrictedProfile {
    pub component: usize,
    pub canteen1: u64,
    pub canteen2: u64,
}

/// Which grid slots of each player occur in a component.
#[derive(Debug, Clone, Copy)]
struct SlotMasks {
    p1: u64,
    p2: u64,
}

fn slot_masks(range: &TimeRange, pairs: &[ArrivalPair]) -> SlotMasks {
    let bit = |t: ArrivalTime| 1u64 << range.index_of(t).expect("pair in range");
    pairs
        .iter()
        .fold(SlotMasks { p1: 0, p2: 0 }, |m, p| SlotMasks {
            p1: m.p1 | bit(p.t1),
            p2: m.p2 | bit(p.t2),
        })
}

impl RestrictedProfile {
    fn of(profile: &StrategyProfile, component: usize, masks: SlotMasks) -> Self {
        RestrictedProfile {
            component,
            canteen1: profile.s1.mask() & masks.p1,
            canteen2: profile.s2.mask() & masks.p2,
        }
    }

    /// Extends to a full profile with office at every slot outside the component.
    pub fn to_profile(&self, range: &TimeRange) -> StrategyProfile {
        StrategyProfile::new(
            Strategy::from_mask(range, self.canteen1),
            Strategy::from_mask(range, self.canteen2),
        )
    }
}

/// One component's slice of the analysis.
#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub pairs: Vec<ArrivalPair>,
    /// Restricted profiles attaining the maximum component EU.
    pub front: BTreeSet<RestrictedProfile>,
    /// Maximum mean payoff over the component's pairs.
    pub eu: f64,
    pub all_office_eu: f64,
    pub cutoff_855_eu: f64,
    /// No optimum sends anyone to the canteen at or after 9:00.
    pub no_late_canteen: bool,
    /// No optimum has one player at the office while the other, arriving
    /// ten minutes later, goes to the canteen.
    pub no_office_then_canteen: bool,
    /// Every optimum is all-office or the 8:55 cut-off.
    pub office_or_855: bool,
}

#[derive(Debug, Clone)]
pub struct ParetoReport {
    pub range: TimeRange,
    pub components: [ComponentReport; 2],
    /// Full-game Pareto optimal profiles (product of the component fronts).
    pub front: Vec<StrategyProfile>,
    /// Common EU of every full-game optimum.
    pub eu: f64,
    pub no_late_canteen: bool,
    pub no_office_then_canteen: bool,
    pub office_or_855: bool,
    /// Full profiles enumerated.
    pub enumerated: u128,
}

impl ParetoReport {
    /// Each component's front is exactly `{all-office}`.
    pub fn front_is_all_office(&self) -> bool {
        self.components.iter().all(|c| {
            c.front.len() == 1 && c.front.iter().all(|r| r.canteen1 == 0 && r.canteen2 == 0)
        })
    }

    /// Each component's front is exactly the cut-off 8:55 restriction.
    pub fn front_is_cutoff_855(&self) -> bool {
        let cut = StrategyProfile::cutoff(&self.range, ClockTime::hm(8, 55));
        let masks = |c: &ComponentReport| slot_masks(&self.range, &c.pairs);
        self.components.iter().enumerate().all(|(i, c)| {
            c.front.len() == 1 && c.front.contains(&RestrictedProfile::of(&cut, i, masks(c)))
        })
    }
}

/// Exhaustively enumerates every profile and extracts the EU-maximal ones
/// per component and for the full game.
pub fn pareto_front(range: &TimeRange, model: &UtilityModel) -> Result<ParetoReport> {
    let count = profile_count(range);
    if count > MAX_PROFILES {
        return Err(Error::Capacity {
            profiles: count,
            limit: MAX_PROFILES,
        });
    }
    model.validate(range)?;

    let parts = components(range);
    let chains = [parts.first.clone(), parts.second.clone()];
    let masks = [slot_masks(range, &chains[0]), slot_masks(range, &chains[1])];
    let n = 1u64 << range.len();

    type Sums = [BTreeMap<RestrictedProfile, f64>; 2];
    let sums: Sums = (0..n)
        .into_par_iter()
        .fold(
            || [BTreeMap::new(), BTreeMap::new()],
            |mut acc: Sums, m1| {
                for m2 in 0..n {
                    let profile = StrategyProfile::new(
                        Strategy::from_mask(range, m1),
                        Strategy::from_mask(range, m2),
                    );
                    for c in 0..2 {
                        let key = RestrictedProfile::of(&profile, c, masks[c]);
                        let total = sum_utility(&profile, &chains[c], model);
                        let prev = acc[c].insert(key, total);
                        debug_assert!(prev.is_none_or(|p| p == total));
                    }
                }
                acc
            },
        )
        .reduce(
            || [BTreeMap::new(), BTreeMap::new()],
            |mut a, b| {
                for c in 0..2 {
                    a[c].extend(b[c].iter().map(|(k, v)| (*k, *v)));
                }
                a
            },
        );

    let all_office = StrategyProfile::all_office(range);
    let cut = StrategyProfile::cutoff(range, ClockTime::hm(8, 55));

    let component_report = |c: usize| -> ComponentReport {
        let best = sums[c].values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = EU_TIE * best.abs().max(1.0);
        let front: BTreeSet<RestrictedProfile> = sums[c]
            .iter()
            .filter(|(_, v)| **v >= best - tol)
            .map(|(k, _)| *k)
            .collect();
        let pairs = chains[c].clone();
        let no_late_canteen = front.iter().all(|r| !has_late_canteen(range, r));
        let no_office_then_canteen = front
            .iter()
            .all(|r| !has_office_then_canteen(range, &pairs, r));
        let allowed = [
            RestrictedProfile::of(&all_office, c, masks[c]),
            RestrictedProfile::of(&cut, c, masks[c]),
        ];
        let office_or_855 = front.iter().all(|r| allowed.contains(r));
        ComponentReport {
            eu: best / pairs.len() as f64,
            all_office_eu: mean_utility(&all_office, &pairs, model),
            cutoff_855_eu: mean_utility(&cut, &pairs, model),
            pairs,
            front,
            no_late_canteen,
            no_office_then_canteen,
            office_or_855,
        }
    };
    let reports = [component_report(0), component_report(1)];

    let mut front = Vec::new();
    for a in &reports[0].front {
        for b in &reports[1].front {
            front.push(StrategyProfile::new(
                Strategy::from_mask(range, a.canteen1 | b.canteen1),
                Strategy::from_mask(range, a.canteen2 | b.canteen2),
            ));
        }
    }
    front.sort();

    let total_pairs = (reports[0].pairs.len() + reports[1].pairs.len()) as f64;
    let eu = reports
        .iter()
        .map(|r| r.eu * r.pairs.len() as f64)
        .sum::<f64>()
        / total_pairs;

    Ok(ParetoReport {
        range: *range,
        no_late_canteen: reports.iter().all(|r| r.no_late_canteen),
        no_office_then_canteen: reports.iter().all(|r| r.no_office_then_canteen),
        office_or_855: reports.iter().all(|r| r.office_or_855),
        components: reports,
        front,
        eu,
        enumerated: count,
    })
}

fn has_late_canteen(range: &TimeRange, r: &RestrictedProfile) -> bool {
    range
        .times()
        .enumerate()
        .filter(|(_, t)| t.minutes() >= NINE_AM)
        .any(|(i, _)| (r.canteen1 | r.canteen2) >> i & 1 == 1)
}

/// Some player is at the office at `t` while the other goes to the canteen at
/// `t + 10`, on a pair of the component.
fn has_office_then_canteen(
    range: &TimeRange,
    pairs: &[ArrivalPair],
    r: &RestrictedProfile,
) -> bool {
    let profile = r.to_profile(range);
    pairs.iter().any(|pair| {
        let (a1, a2) = profile.actions(pair);
        if pair.t2 > pair.t1 {
            a1 == Action::Office && a2 == Action::Canteen
        } else {
            a2 == Action::Office && a1 == Action::Canteen
        }
    })
}

/// Profiles surviving both lemma screens on a component.
pub fn lemma_survivors(range: &TimeRange, component: usize) -> Result<BTreeSet<RestrictedProfile>> {
    let parts = components(range);
    let pairs = if component == 0 {
        parts.first
    } else {
        parts.second
    };
    let masks = slot_masks(range, &pairs);
    let mut out = BTreeSet::new();
    for profile in all_profiles(range)? {
        let r = RestrictedProfile::of(&profile, component, masks);
        if !has_late_canteen(range, &r) && !has_office_then_canteen(range, &pairs, &r) {
            out.insert(r);
        }
    }
    Ok(out)
}

/// EU of the all-office profile and of every symmetric cut-off profile,
/// from just before `tmin` to just after `tmax`.
pub fn cutoff_table(range: &TimeRange, model: &UtilityModel) -> Vec<(Classification, f64)> {
    let start = range.tmin().minutes() - STEP / 2;
    (0..=range.len())
        .map(|i| {
            let c = ClockTime::from_minutes(start + i as i32 * STEP);
            let profile = StrategyProfile::cutoff(range, c);
            (
                profile.s1.classify(),
                expected_utility(&profile, range, model),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn concrete() -> UtilityModel {
        UtilityModel::default()
    }

    #[test]
    fn classification() {
        let r = TimeRange::analysis();
        assert_eq!(
            Strategy::canteen_before_nine(&r).classify(),
            Classification::Cutoff(ClockTime::hm(8, 55))
        );
        let office = Strategy::all_office(&r).classify();
        assert_eq!(office, Classification::Cutoff(ClockTime::hm(8, 5)));
        assert!(office.is_all_office(&r));
        let bumpy = Strategy::from_fn(&r, |t| {
            if t == ArrivalTime::hm(8, 30) || t.minutes() >= NINE_AM {
                Action::Office
            } else {
                Action::Canteen
            }
        });
        assert_eq!(bumpy.classify(), Classification::NonCutoff);
        assert_eq!(
            Strategy::from_mask(&r, 0x7f).classify(),
            Classification::Cutoff(ClockTime::hm(9, 15))
        );
    }

    #[test]
    fn concrete_expected_utilities() {
        let r = TimeRange::analysis();
        let office = expected_utility(&StrategyProfile::all_office(&r), &r, &concrete());
        assert!((office - 2.0 * 0.99f64.ln()).abs() < 1e-12);
        let cut = expected_utility(
            &StrategyProfile::cutoff(&r, ClockTime::hm(8, 55)),
            &r,
            &concrete(),
        );
        // 8 canteen coordinations, 2 forbidden misses, 2 late office coordinations
        let hand =
            (8.0 * 0.99f64.ln() + 2.0 * 2.0 * 0.01f64.ln() + 2.0 * 2.0 * 0.99f64.ln()) / 12.0;
        assert!((cut - hand).abs() < 1e-12);
        assert!((cut - -1.545).abs() < 0.001);
        assert!((10.0 + cut - 8.46).abs() < 0.01);
        let abs = UtilityModel::abstract_values(2.0, 1.0, 0.0);
        assert_eq!(
            expected_utility(&StrategyProfile::all_office(&r), &r, &abs),
            1.0
        );
    }

    #[test]
    fn safety() {
        let r = TimeRange::analysis();
        assert!(is_safe(&StrategyProfile::all_office(&r), &r));
        assert!(!is_safe(
            &StrategyProfile::cutoff(&r, ClockTime::hm(8, 55)),
            &r
        ));
    }

    #[test]
    fn eu_decomposes_over_components() {
        let r = TimeRange::analysis();
        let parts = components(&r);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = UtilityModel::random_per_pair(&r, &mut rng);
        for profile in all_profiles(&r).unwrap().step_by(97) {
            let whole = expected_utility(&profile, &r, &model);
            let a = mean_utility(&profile, &parts.first, &model);
            let b = mean_utility(&profile, &parts.second, &model);
            let n1 = parts.first.len() as f64;
            let n2 = parts.second.len() as f64;
            assert!((whole - (n1 * a + n2 * b) / (n1 + n2)).abs() < 1e-12);
        }
    }

    #[test]
    fn concrete_front_is_all_office() {
        let r = TimeRange::analysis();
        let report = pareto_front(&r, &concrete()).unwrap();
        assert!(report.front_is_all_office());
        assert_eq!(report.front, vec![StrategyProfile::all_office(&r)]);
        assert!(report.no_late_canteen && report.no_office_then_canteen && report.office_or_855);
        assert!((report.eu - -0.0201).abs() < 1e-4);
        for c in &report.components {
            assert!((c.cutoff_855_eu - -1.545).abs() < 0.001);
        }
        assert_eq!(report.enumerated, 1 << 14);
    }

    #[test]
    fn cheap_canteen_model_prefers_cutoff() {
        let r = TimeRange::analysis();
        let report = pareto_front(&r, &UtilityModel::abstract_values(-0.1, -5.0, -6.0)).unwrap();
        assert!(report.front_is_cutoff_855());
        assert_eq!(
            report.front,
            vec![StrategyProfile::cutoff(&r, ClockTime::hm(8, 55))]
        );
        assert!(report.office_or_855);
    }

    #[test]
    fn invalid_models_and_capacity() {
        let r = TimeRange::analysis();
        assert!(matches!(
            pareto_front(&r, &UtilityModel::abstract_values(-5.0, -0.1, -6.0)),
            Err(Error::InvalidUtility(_))
        ));
        let wide = TimeRange::parse("7:00", "9:10").unwrap();
        assert!(matches!(
            pareto_front(&wide, &concrete()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn random_models_respect_the_theorem() {
        let r = TimeRange::analysis();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let model = UtilityModel::random_abstract(&mut rng);
            assert!(model.satisfies_constraints(&r));
            let report = pareto_front(&r, &model).unwrap();
            assert!(
                report.office_or_855 && report.no_late_canteen && report.no_office_then_canteen
            );
        }
    }

    #[test]
    fn per_pair_models_keep_the_lemmas_but_not_the_cutoff() {
        // With constants varying by pair the optimal front is still made of
        // cut-off profiles, but the best cut-off can be earlier than 8:55.
        let r = TimeRange::analysis();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut early_cutoff_seen = false;
        for _ in 0..20 {
            let model = UtilityModel::random_per_pair(&r, &mut rng);
            assert!(model.satisfies_constraints(&r));
            let report = pareto_front(&r, &model).unwrap();
            assert!(report.no_late_canteen && report.no_office_then_canteen);
            for c in 0..2 {
                let survivors = lemma_survivors(&r, c).unwrap();
                assert!(report.components[c].front.is_subset(&survivors));
            }
            early_cutoff_seen |= !report.office_or_855;
        }
        assert!(early_cutoff_seen);
    }

    #[test]
    fn front_is_symmetric_under_player_swap() {
        let r = TimeRange::live();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let model = UtilityModel::random_abstract(&mut rng);
            let report = pareto_front(&r, &model).unwrap();
            let swapped: Vec<StrategyProfile> = {
                let mut v: Vec<_> = report.front.iter().map(|p| p.swapped()).collect();
                v.sort();
                v
            };
            assert_eq!(swapped, report.front);
        }
    }

    #[test]
    fn screens_never_remove_an_optimum() {
        let r = TimeRange::analysis();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let survivors = [
            lemma_survivors(&r, 0).unwrap(),
            lemma_survivors(&r, 1).unwrap(),
        ];
        // survivors are exactly the cut-off profiles with threshold before 9:00
        for (c, set) in survivors.iter().enumerate() {
            for s in set {
                let p = s.to_profile(&r);
                let parts = components(&r);
                let pairs = if c == 0 { &parts.first } else { &parts.second };
                // on its own slots the profile behaves as a symmetric cut-off
                let cls: BTreeSet<_> = (0..=5)
                    .map(|i| ClockTime::from_minutes(5 + 10 * i))
                    .filter(|cut| {
                        let q = StrategyProfile::cutoff(&r, *cut);
                        pairs.iter().all(|t| q.actions(t) == p.actions(t))
                    })
                    .collect();
                assert!(!cls.is_empty());
            }
        }
        for _ in 0..10 {
            let model = UtilityModel::random_abstract(&mut rng);
            let report = pareto_front(&r, &model).unwrap();
            for (c, comp) in report.components.iter().enumerate() {
                assert!(comp.front.is_subset(&survivors[c]));
            }
        }
    }

    #[test]
    fn only_all_office_is_safe() {
        for r in [TimeRange::analysis(), TimeRange::live()] {
            let safe: Vec<_> = all_profiles(&r)
                .unwrap()
                .filter(|p| is_safe(p, &r))
                .collect();
            assert_eq!(safe, vec![StrategyProfile::all_office(&r)]);
        }
    }

    #[test]
    fn cutoff_table_covers_all_thresholds() {
        let r = TimeRange::analysis();
        let table = cutoff_table(&r, &concrete());
        assert_eq!(table.len(), 8);
        assert!(table[0].0.is_all_office(&r));
        let (cls, eu) = table[5];
        assert_eq!(cls, Classification::Cutoff(ClockTime::hm(8, 55)));
        assert!((eu - -1.545).abs() < 0.001);
    }

    #[test]
    fn only_all_office_has_constant_payoff() {
        let r = TimeRange::analysis();
        let model = concrete();
        let pairs = arrival_pairs(&r);
        for profile in all_profiles(&r).unwrap() {
            let first = {
                let (a, b) = profile.actions(&pairs[0]);
                model.payoff(&pairs[0], a, b)
            };
            let constant = pairs.iter().all(|t| {
                let (a, b) = profile.actions(t);
                model.payoff(t, a, b) == first
            });
            if is_safe(&profile, &r) {
                assert!(constant);
                assert_eq!(profile, StrategyProfile::all_office(&r));
            }
        }
    }
}
