//! Schedules and their replay on the store-and-forward model.
//!
//! A schedule is a list of sends `(round, from, to, message)`. Replay keeps,
//! for every tree node, the round at which the node first held the tree's
//! message; roots hold theirs at round 0. A message sent in round `t` is
//! usable by the receiver from round `t + 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{EdgeId, MulticastInstance, NodeId, TreeId};

/// One packet crossing one edge in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Send {
    pub round: u32,
    pub from: NodeId,
    pub to: NodeId,
    #[serde(rename = "msg")]
    pub message: TreeId,
}

/// Sends sorted by `(round, from, to, message)` plus the declared length.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    sends: Vec<Send>,
    declared_length: u32,
}

impl Schedule {
    pub fn new(mut sends: Vec<Send>) -> Schedule {
        sends.sort_unstable();
        let declared_length = sends.last().map_or(0, |s| s.round);
        Schedule { sends, declared_length }
    }

    /// Keeps an explicit declared length (used when frames are padded).
    pub fn with_declared_length(sends: Vec<Send>, declared_length: u32) -> Schedule {
        let mut s = Schedule::new(sends);
        s.declared_length = s.declared_length.max(declared_length);
        s
    }

    pub fn sends(&self) -> &[Send] {
        &self.sends
    }

    pub fn into_sends(self) -> Vec<Send> {
        self.sends
    }

    pub fn len(&self) -> usize {
        self.sends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sends.is_empty()
    }

    /// Largest round in use (or the explicit declared length, if larger).
    pub fn declared_length(&self) -> u32 {
        self.declared_length
    }

    /// Sends grouped by round, in round order.
    pub fn rounds(&self) -> impl Iterator<Item = (u32, &[Send])> {
        self.sends.chunk_by(|a, b| a.round == b.round).map(|chunk| (chunk[0].round, chunk))
    }

    pub fn to_file(&self) -> ScheduleFile {
        ScheduleFile { length: self.declared_length, sends: self.sends.clone() }
    }

    pub fn from_file(file: ScheduleFile) -> Schedule {
        Schedule::with_declared_length(file.sends, file.length)
    }

    /// Compact JSON, sends sorted by `(round, from, to)`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Schedule, crate::Error> {
        let file: ScheduleFile = serde_json::from_str(text)?;
        Ok(Schedule::from_file(file))
    }
}

/// On-disk schedule format:
/// `{"length": int, "sends": [{"round":int,"from":int,"to":int,"msg":int},...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub length: u32,
    pub sends: Vec<Send>,
}

/// A model constraint broken by a send, or a leaf left without its message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleViolation {
    /// Round 0, or past the declared length.
    RoundOutOfRange { send: Send },
    UnknownMessage { send: Send },
    NotAGraphEdge { send: Send },
    /// The edge is in the graph but not in the message's tree.
    EdgeNotInTree { send: Send },
    /// The sender did not hold the message at the start of the round.
    SenderLacksMessage { send: Send },
    /// A second packet on the same edge in the same round (either direction).
    EdgeCapacity { send: Send, first: Send },
    Undelivered { tree: TreeId, missing_leaves: usize },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |s: &Send| format!("round {} {}->{} msg {}", s.round, s.from, s.to, s.message.0);
        match self {
            ScheduleViolation::RoundOutOfRange { send } => write!(f, "{}: round out of range", s(send)),
            ScheduleViolation::UnknownMessage { send } => write!(f, "{}: no tree has this message", s(send)),
            ScheduleViolation::NotAGraphEdge { send } => write!(f, "{}: not a graph edge", s(send)),
            ScheduleViolation::EdgeNotInTree { send } => {
                write!(f, "{}: edge is not in the message's tree", s(send))
            }
            ScheduleViolation::SenderLacksMessage { send } => {
                write!(f, "{}: sender does not hold the message", s(send))
            }
            ScheduleViolation::EdgeCapacity { send, first } => {
                write!(f, "{}: edge already used this round by {}", s(send), s(first))
            }
            ScheduleViolation::Undelivered { tree, missing_leaves } => {
                write!(f, "tree {}: {missing_leaves} leaves never receive the message", tree.0)
            }
        }
    }
}

/// Outcome of [`simulate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryReport {
    pub valid: bool,
    /// Smallest round by which every leaf of every tree holds its message.
    /// `None` when some leaf never does.
    pub length: Option<u32>,
    pub violations: Vec<ScheduleViolation>,
    /// Legal sends to a node that already held the message.
    pub redundant: Vec<Send>,
    pub per_tree_completion_round: BTreeMap<TreeId, Option<u32>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("schedule is invalid within the first {round} rounds: {first}")]
    InvalidPrefix { round: u32, first: ScheduleViolation, violations: Vec<ScheduleViolation> },
}

impl std::error::Error for ScheduleViolation {}

const NEVER: u32 = u32::MAX;

/// Replay state: first-arrival round of each tree's message at each tree node.
#[derive(Clone, Debug)]
pub struct Replay {
    /// `arrival[tree][local]`, `u32::MAX` if never.
    arrival: Vec<Vec<u32>>,
    pub violations: Vec<ScheduleViolation>,
    pub redundant: Vec<Send>,
}

impl Replay {
    /// Replays every send with `round <= upto` (all sends when `None`).
    pub fn run(instance: &MulticastInstance, schedule: &Schedule, upto: Option<u32>) -> Replay {
        let mut arrival: Vec<Vec<u32>> = instance
            .trees()
            .iter()
            .map(|t| {
                let mut a = vec![NEVER; t.len()];
                a[0] = 0;
                a
            })
            .collect();
        let mut violations = Vec::new();
        let mut redundant = Vec::new();
        let graph = instance.graph();
        // Per edge: the round it was last used and by which send.
        let mut used_round = vec![0u32; graph.edge_count()];
        let mut used_by: Vec<Option<Send>> = vec![None; graph.edge_count()];
        let limit = upto.unwrap_or(u32::MAX);
        let declared = schedule.declared_length();

        for send in schedule.sends() {
            if send.round > limit {
                break;
            }
            if send.round == 0 || send.round > declared {
                violations.push(ScheduleViolation::RoundOutOfRange { send: *send });
                continue;
            }
            let Some(edge) = graph.edge_id(send.from, send.to) else {
                violations.push(ScheduleViolation::NotAGraphEdge { send: *send });
                continue;
            };
            let Some(t) = instance.tree_index(send.message) else {
                violations.push(ScheduleViolation::UnknownMessage { send: *send });
                continue;
            };
            let tree = instance.tree(t);
            let (Some(fl), Some(tl)) = (tree.local_index(send.from), tree.local_index(send.to)) else {
                violations.push(ScheduleViolation::EdgeNotInTree { send: *send });
                continue;
            };
            if tree.parent_local(tl) != Some(fl) && tree.parent_local(fl) != Some(tl) {
                violations.push(ScheduleViolation::EdgeNotInTree { send: *send });
                continue;
            }
            if used_round[edge.index()] == send.round {
                violations.push(ScheduleViolation::EdgeCapacity {
                    send: *send,
                    first: used_by[edge.index()].expect("recorded with the round"),
                });
                continue;
            }
            used_round[edge.index()] = send.round;
            used_by[edge.index()] = Some(*send);
            let arr = &mut arrival[t];
            if arr[fl] >= send.round {
                violations.push(ScheduleViolation::SenderLacksMessage { send: *send });
                continue;
            }
            if arr[tl] <= send.round {
                redundant.push(*send);
            } else {
                arr[tl] = send.round;
            }
        }
        Replay { arrival, violations, redundant }
    }

    /// Round at which local node `local` of tree index `tree` first held the
    /// message, or `None`.
    pub fn arrival(&self, tree: usize, local: usize) -> Option<u32> {
        match self.arrival[tree][local] {
            NEVER => None,
            r => Some(r),
        }
    }

    /// Whether the node holds the message after `round` has been applied.
    pub fn holds_after(&self, tree: usize, local: usize, round: u32) -> bool {
        self.arrival[tree][local] <= round
    }

    /// Knowledge sets after `round`: every node that holds at least one message.
    pub fn knowledge_after(
        &self,
        instance: &MulticastInstance,
        round: u32,
    ) -> BTreeMap<NodeId, BTreeSet<TreeId>> {
        let mut out: BTreeMap<NodeId, BTreeSet<TreeId>> = BTreeMap::new();
        for (t, tree) in instance.trees().iter().enumerate() {
            for (l, &a) in self.arrival[t].iter().enumerate() {
                if a <= round {
                    out.entry(tree.node(l)).or_default().insert(tree.message());
                }
            }
        }
        out
    }
}

/// Replays `schedule` on `instance`, collecting every violation.
pub fn simulate(instance: &MulticastInstance, schedule: &Schedule) -> DeliveryReport {
    let replay = Replay::run(instance, schedule, None);
    let mut violations = replay.violations.clone();
    let mut per_tree = BTreeMap::new();
    let mut length = Some(0u32);
    for (t, tree) in instance.trees().iter().enumerate() {
        let mut done = Some(0u32);
        let mut missing = 0usize;
        for leaf in tree.leaves_local() {
            match replay.arrival(t, leaf) {
                Some(r) => done = done.map(|d| d.max(r)),
                None => missing += 1,
            }
        }
        if missing > 0 {
            done = None;
            violations.push(ScheduleViolation::Undelivered { tree: tree.id(), missing_leaves: missing });
        }
        length = match (length, done) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        per_tree.insert(tree.id(), done);
    }
    DeliveryReport {
        valid: violations.is_empty(),
        length,
        violations,
        redundant: replay.redundant,
        per_tree_completion_round: per_tree,
    }
}

/// Exact knowledge sets after `round` rounds. Fails if the schedule breaks
/// a model constraint within those rounds.
pub fn knowledge_at(
    instance: &MulticastInstance,
    schedule: &Schedule,
    round: u32,
) -> Result<BTreeMap<NodeId, BTreeSet<TreeId>>, ScheduleError> {
    let replay = Replay::run(instance, schedule, Some(round));
    if let Some(first) = replay.violations.first() {
        return Err(ScheduleError::InvalidPrefix {
            round,
            first: first.clone(),
            violations: replay.violations.clone(),
        });
    }
    Ok(replay.knowledge_after(instance, round))
}

/// Sends whose edge is used more than once in a round, grouped by
/// `(round, edge)`. Empty for any schedule that respects capacity.
pub fn capacity_conflicts(instance: &MulticastInstance, schedule: &Schedule) -> Vec<(u32, EdgeId, usize)> {
    let mut count: BTreeMap<(u32, EdgeId), usize> = BTreeMap::new();
    for s in schedule.sends() {
        if let Some(e) = instance.graph().edge_id(s.from, s.to) {
            *count.entry((s.round, e)).or_default() += 1;
        }
    }
    count.into_iter().filter(|&(_, c)| c > 1).map(|((r, e), c)| (r, e, c)).collect()
}
