//! Structural checks on built instances and the per-edge delay check.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use super::{LowerBoundError, LowerBoundInstance};
use crate::instance::{EdgeId, MulticastInstance, NodeId, TreeId};
use crate::schedule::{Replay, Schedule};

/// Outcome of [`check_lemmas`]; each flag is one structural property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    /// Every edge carries exactly `C` labels and the congestion is `C`.
    pub congestion: bool,
    /// Every tree has depth exactly `D` and the dilation is `D`.
    pub dilation: bool,
    /// Every label induces a connected tree containing its root.
    pub trees: bool,
    /// Node count at most `2^(C·2^(D+1))`.
    pub node_bound: bool,
    pub failures: Vec<String>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.congestion && self.dilation && self.trees && self.node_bound
    }
}

/// Checks one label's edge set: connected, acyclic and containing `root`.
fn label_tree_problem(root: NodeId, edges: &[(NodeId, NodeId)]) -> Option<String> {
    if edges.is_empty() {
        return Some("has no edges".into());
    }
    let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    if !adj.contains_key(&root) {
        return Some(format!("does not touch its root {root}"));
    }
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[&v] {
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    if seen.len() != adj.len() {
        return Some(format!("is disconnected ({} of {} nodes reachable from the root)", seen.len(), adj.len()));
    }
    if edges.len() + 1 != adj.len() {
        return Some(format!("has a cycle ({} edges on {} nodes)", edges.len(), adj.len()));
    }
    None
}

/// Verifies the four structural properties of a `(C, D)` instance.
pub fn check_lemmas(lb: &LowerBoundInstance, congestion: u32, depth: u32) -> LemmaReport {
    let mut failures = Vec::new();
    let instance = &lb.instance;
    let graph = instance.graph();

    let metrics = instance.metrics();
    let mut congestion_ok = metrics.congestion == congestion;
    if !congestion_ok {
        failures.push(format!("congestion is {} instead of {congestion}", metrics.congestion));
    }
    for (e, labels) in lb.edge_labels.iter().enumerate() {
        if labels.len() != congestion as usize {
            congestion_ok = false;
            failures.push(format!("edge {} carries {} labels", graph.edge(EdgeId(e as u32)), labels.len()));
        }
    }

    let mut dilation_ok = metrics.dilation == depth;
    if !dilation_ok {
        failures.push(format!("dilation is {} instead of {depth}", metrics.dilation));
    }
    for t in instance.trees() {
        if t.depth() != depth {
            dilation_ok = false;
            failures.push(format!("tree {} has depth {}", t.id(), t.depth()));
        }
    }

    let mut per_label: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); lb.label_root.len()];
    for (e, labels) in lb.edge_labels.iter().enumerate() {
        let edge = graph.edge(EdgeId(e as u32));
        for l in labels {
            per_label[l.0 as usize].push((edge.lo(), edge.hi()));
        }
    }
    let mut tree_failures: Vec<String> = per_label
        .par_iter()
        .enumerate()
        .filter_map(|(l, edges)| {
            label_tree_problem(lb.label_root[l], edges).map(|why| format!("label {l} {why}"))
        })
        .collect();
    let trees_ok = tree_failures.is_empty();
    failures.append(&mut tree_failures);

    let exponent = u64::from(congestion).checked_shl(depth + 1).unwrap_or(u64::MAX);
    let node_bound = exponent >= 32 || u64::from(instance.node_count()) <= 1u64 << exponent;
    if !node_bound {
        failures.push(format!("{} nodes exceed 2^{exponent}", instance.node_count()));
    }
    LemmaReport { congestion: congestion_ok, dilation: dilation_ok, trees: trees_ok, node_bound, failures }
}

/// Appends isolated nodes up to `n`.
pub fn pad_to_n(instance: &MulticastInstance, n: u32) -> Result<MulticastInstance, LowerBoundError> {
    let current = instance.node_count();
    if n < current {
        return Err(LowerBoundError::PadTooSmall { target: n, current });
    }
    Ok(instance.with_node_count(n))
}

/// Delay facts for one edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeDelay {
    pub edge: EdgeId,
    pub congestion: u32,
    /// Earliest round any of the edge's messages can cross it.
    pub first_round: u32,
    /// Last round counted: `first_round - 1 + ⌊c/2⌋`.
    pub checkpoint: u32,
    /// Trees whose message has not crossed by the checkpoint.
    pub delayed: Vec<TreeId>,
    /// `⌈c/2⌉`.
    pub required: u32,
}

/// Result of [`markov_delay_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkovReport {
    pub edges: Vec<EdgeDelay>,
    pub pass: bool,
    /// Edges that fail, if any.
    pub failing: Vec<EdgeId>,
}

/// For each edge used by `c` trees: no message can cross before the round
/// after it first reaches the edge's upper endpoint, and one message crosses
/// per round, so after `⌊c/2⌋` such rounds at least `⌈c/2⌉` trees must still
/// be waiting. Checks this on the replayed schedule.
pub fn markov_delay_check(instance: &MulticastInstance, schedule: &Schedule) -> MarkovReport {
    let replay = Replay::run(instance, schedule, None);
    let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); instance.graph().edge_count()];
    for (t, tree) in instance.trees().iter().enumerate() {
        for l in 1..tree.len() {
            users[instance.parent_edge(t, l).index()].push((t, l));
        }
    }
    let edges: Vec<EdgeDelay> = users
        .par_iter()
        .enumerate()
        .filter(|(_, u)| !u.is_empty())
        .map(|(e, u)| {
            let c = u.len() as u32;
            let first_round = u
                .iter()
                .map(|&(t, l)| {
                    let tree = instance.tree(t);
                    tree.depth_local(tree.parent_local(l).expect("non-root")) + 1
                })
                .min()
                .expect("non-empty");
            let checkpoint = first_round - 1 + c / 2;
            let delayed = u
                .iter()
                .filter(|&&(t, l)| !replay.holds_after(t, l, checkpoint))
                .map(|&(t, _)| instance.tree(t).id())
                .collect();
            EdgeDelay { edge: EdgeId(e as u32), congestion: c, first_round, checkpoint, delayed, required: c.div_ceil(2) }
        })
        .collect();
    let failing: Vec<EdgeId> =
        edges.iter().filter(|d| (d.delayed.len() as u32) < d.required).map(|d| d.edge).collect();
    MarkovReport { pass: failing.is_empty(), edges, failing }
}
