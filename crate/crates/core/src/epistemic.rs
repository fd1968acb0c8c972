//! Finite Kripke models with one equivalence relation per agent.
//!
//! Propositions are extensional: a set of worlds. Knowledge, everyone-knows,
//! its iterates and the common-knowledge fixpoint are all finite set
//! computations over the model's partitions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::game::{arrival_pairs, ArrivalPair, Player};
use crate::time::{ArrivalTime, TimeRange};

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

/// A set of worlds of one particular model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proposition {
    model: u64,
    members: Vec<bool>,
}

impl Proposition {
    pub fn contains(&self, world: usize) -> bool {
        self.members.get(world).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|m| *m)
    }

    /// Indices of member worlds, ascending.
    pub fn worlds(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| i)
    }

    fn check(&self, other: &Proposition) -> Result<()> {
        if self.model == other.model {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }

    fn zip_with(&self, other: &Proposition, f: impl Fn(bool, bool) -> bool) -> Result<Proposition> {
        self.check(other)?;
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Proposition {
            model: self.model,
            members,
        })
    }

    pub fn and(&self, other: &Proposition) -> Result<Proposition> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Proposition) -> Result<Proposition> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn not(&self) -> Proposition {
        Proposition {
            model: self.model,
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Proposition) -> Result<bool> {
        self.check(other)?;
        Ok(self
            .members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !a || *b))
    }
}

/// Worlds plus, for each agent, a partition into information classes.
#[derive(Debug, Clone)]
pub struct KripkeModel<W> {
    id: u64,
    worlds: Vec<W>,
    /// `classes[agent][world]` is the class index of `world` for `agent`.
    classes: Vec<Vec<usize>>,
    /// `members[agent][class]` lists the worlds of that class.
    members: Vec<Vec<Vec<usize>>>,
}

/// Maps a world to the information an agent observes there.
pub type KeyFn<'a, W, K> = Box<dyn Fn(&W) -> K + 'a>;

impl<W> KripkeModel<W> {
    /// Builds a model whose relation for each agent is "same key".
    pub fn from_keys<K: Ord>(worlds: Vec<W>, keys: Vec<KeyFn<'_, W, K>>) -> Self {
        let mut classes = Vec::with_capacity(keys.len());
        let mut members = Vec::with_capacity(keys.len());
        for key in &keys {
            let mut index: BTreeMap<K, usize> = BTreeMap::new();
            let mut of_world = Vec::with_capacity(worlds.len());
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for (w, world) in worlds.iter().enumerate() {
                let next = index.len();
                let c = *index.entry(key(world)).or_insert(next);
                if c == groups.len() {
                    groups.push(Vec::new());
                }
                groups[c].push(w);
                of_world.push(c);
            }
            classes.push(of_world);
            members.push(groups);
        }
        KripkeModel {
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            worlds,
            classes,
            members,
        }
    }

    pub fn worlds(&self) -> &[W] {
        &self.worlds
    }

    pub fn agents(&self) -> usize {
        self.classes.len()
    }

    /// Worlds the agent cannot tell apart from `world` (including itself).
    pub fn class_of(&self, agent: usize, world: usize) -> &[usize] {
        &self.members[agent][self.classes[agent][world]]
    }

    pub fn indistinguishable(&self, agent: usize, a: usize, b: usize) -> bool {
        self.classes[agent][a] == self.classes[agent][b]
    }

    pub fn proposition(&self, f: impl Fn(&W) -> bool) -> Proposition {
        Proposition {
            model: self.id,
            members: self.worlds.iter().map(f).collect(),
        }
    }

    pub fn all(&self) -> Proposition {
        self.proposition(|_| true)
    }

    pub fn nothing(&self) -> Proposition {
        self.proposition(|_| false)
    }

    fn check(&self, p: &Proposition) -> Result<()> {
        if p.model == self.id && p.members.len() == self.worlds.len() {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }

    /// `K_agent p`: worlds whose whole class lies inside `p`.
    pub fn knows(&self, agent: usize, p: &Proposition) -> Result<Proposition> {
        self.check(p)?;
        let members = (0..self.worlds.len())
            .map(|w| self.class_of(agent, w).iter().all(|v| p.members[*v]))
            .collect();
        Ok(Proposition {
            model: self.id,
            members,
        })
    }

    /// `E p`: every agent knows `p`.
    pub fn everyone_knows(&self, p: &Proposition) -> Result<Proposition> {
        let mut acc = self.all();
        for agent in 0..self.agents() {
            acc = acc.and(&self.knows(agent, p)?)?;
        }
        Ok(acc)
    }

    /// `E^n p`, with `E^0 p = p`.
    pub fn iterate_e(&self, p: &Proposition, n: usize) -> Result<Proposition> {
        self.check(p)?;
        let mut acc = p.clone();
        for _ in 0..n {
            acc = self.everyone_knows(&acc)?;
        }
        Ok(acc)
    }

    /// Greatest fixpoint of `E` below `p`, with the number of `E` steps taken
    /// before the extension stopped changing.
    pub fn common_knowledge_steps(&self, p: &Proposition) -> Result<(Proposition, usize)> {
        let mut current = self.everyone_knows(p)?;
        let mut steps = 1;
        loop {
            let next = self.everyone_knows(&current)?;
            if next == current {
                return Ok((current, steps));
            }
            current = next;
            steps += 1;
        }
    }

    /// `C p = ∩_n E^n p`.
    pub fn common_knowledge(&self, p: &Proposition) -> Result<Proposition> {
        self.common_knowledge_steps(p).map(|(c, _)| c)
    }
}

/// The arrival-pair model: one agent per player, `t ∼i t'` iff `t_i = t'_i`.
pub fn build_model(range: &TimeRange) -> KripkeModel<ArrivalPair> {
    KripkeModel::from_keys(
        arrival_pairs(range),
        vec![
            Box::new(|p: &ArrivalPair| p.t1),
            Box::new(|p: &ArrivalPair| p.t2),
        ],
    )
}

/// "Both players arrived before 9:00".
pub fn both_before_nine(model: &KripkeModel<ArrivalPair>) -> Proposition {
    model.proposition(ArrivalPair::both_before_nine)
}

/// The strongest knowledge a player has, at a given own arrival time, that
/// there is time for the canteen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KnowledgeLabel {
    None,
    Private,
    Shared(u32),
}

impl fmt::Display for KnowledgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnowledgeLabel::None => f.write_str("none"),
            KnowledgeLabel::Private => f.write_str("private"),
            KnowledgeLabel::Shared(n) => write!(f, "shared:{n}"),
        }
    }
}

/// Knowledge label of arrival time `t`, computed from the operators.
///
/// Quantifies over every world where either player arrives at `t`:
/// `none` when the player cannot know their own arrival is before 9:00,
/// `shared(n)` for the largest `n` with `K_i E^{n-1} p` throughout, and
/// `private` when the own arrival is known early but `K_i p` fails somewhere.
pub fn knowledge_label(range: &TimeRange, t: ArrivalTime) -> Result<KnowledgeLabel> {
    if !range.contains(t) {
        return Err(Error::InvalidTime(t.to_string()));
    }
    let model = build_model(range);
    let p = both_before_nine(&model);

    let holds_at_own_arrival = |prop_for: &dyn Fn(Player) -> Result<Proposition>| -> Result<bool> {
        for player in Player::BOTH {
            let known = prop_for(player)?;
            for (w, pair) in model.worlds().iter().enumerate() {
                if pair.own(player) == t && !known.contains(w) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };

    let own_early = |player: Player| {
        let own = model.proposition(|pair| pair.own(player).is_before_nine());
        model.knows(player.index(), &own)
    };
    if !holds_at_own_arrival(&own_early)? {
        return Ok(KnowledgeLabel::None);
    }

    let mut depth = 0u32;
    let mut layer = p.clone(); // E^{depth} p
    loop {
        let knows_layer = |player: Player| model.knows(player.index(), &layer);
        if !holds_at_own_arrival(&knows_layer)? {
            break;
        }
        depth += 1;
        layer = model.everyone_knows(&layer)?;
        if depth as usize > model.worlds().len() {
            // only reachable if p were common knowledge at t
            break;
        }
    }
    Ok(if depth == 0 {
        KnowledgeLabel::Private
    } else {
        KnowledgeLabel::Shared(depth)
    })
}

/// Labels for every time in the range, in order.
pub fn knowledge_table(range: &TimeRange) -> Result<Vec<(ArrivalTime, KnowledgeLabel)>> {
    range
        .times()
        .map(|t| Ok((t, knowledge_label(range, t)?)))
        .collect()
}

/// Message-passing model after `delivered` messages actually got through.
#[derive(Debug, Clone)]
pub struct MessageChain {
    /// Worlds are message counts `0..=delivered`; agent 0 sends the odd
    /// messages, agent 1 the even ones.
    pub model: KripkeModel<u32>,
    /// "The first message got through".
    pub warning: Proposition,
    /// World index of the actual world.
    pub actual: usize,
    /// Largest `n` with the actual world in `E^n warning` (0 if none).
    pub depth: usize,
}

/// Builds the model in which the sender of message `m + 1` cannot tell `m`
/// from `m + 1` delivered messages.
pub fn message_chain_model(delivered: u32) -> Result<MessageChain> {
    let worlds: Vec<u32> = (0..=delivered).collect();
    // sender of odd messages: classes {0,1},{2,3},...
    // sender of even messages: classes {0},{1,2},{3,4},...
    let model = KripkeModel::from_keys(
        worlds,
        vec![Box::new(|m: &u32| m / 2), Box::new(|m: &u32| m.div_ceil(2))],
    );
    let warning = model.proposition(|m| *m >= 1);
    let actual = delivered as usize;

    let mut depth = 0;
    let mut layer = warning.clone();
    for n in 1..=model.worlds().len() {
        layer = model.everyone_knows(&layer)?;
        if !layer.contains(actual) {
            break;
        }
        depth = n;
    }
    Ok(MessageChain {
        model,
        warning,
        actual,
        depth,
    })
}
