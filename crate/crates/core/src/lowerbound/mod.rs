//! Recursive instances on which every schedule needs `Ω(C·D)` rounds.
//!
//! Labels are split into `2^(D-1)` sets of `C`. Each adjacent pair of sets
//! gets two root edges meeting at a hub `v_i`; below the hubs hangs one
//! depth-`(D-1)` copy for every way of picking half of each pair (an
//! interleaving), with the copy's roots glued to the matching hubs. Every
//! edge carries exactly `C` labels and every label induces a depth-`D` tree.

use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{bfs_tree_from, Graph, InstanceError, MulticastInstance, MulticastTree, NodeId, TreeId};

mod checks;
mod opt;

pub use checks::{check_lemmas, markov_delay_check, pad_to_n, EdgeDelay, LemmaReport, MarkovReport};
pub use opt::{exhaustive_opt, OptOutcome, OPT_MAX_EDGES, OPT_MAX_HORIZON, OPT_MAX_MESSAGES};

/// One multicast tree of the construction; its tree id equals the label id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerBoundError {
    #[error("congestion must be even and at least 2, got {0}")]
    OddCongestion(u32),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("label sets must have {expected} labels each, got {got}")]
    SetSize { expected: usize, got: usize },
    #[error("label sets overlap")]
    Overlap,
    #[error("partition needs an even number of sets, got {0}")]
    OddSetCount(usize),
    #[error(
        "C·2^(D+1) = {exponent} exceeds the size cap {cap}, or the instance would have {edges} edges \
         (cap {edge_cap}) and {nodes} nodes"
    )]
    TooLarge { exponent: u64, cap: u32, edges: u128, edge_cap: u64, nodes: u128 },
    #[error("cannot pad to {target} nodes, instance already has {current}")]
    PadTooSmall { target: u32, current: u32 },
    #[error("instance too large for exhaustive search: {0}")]
    OptGuard(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// An ordered tuple of disjoint label sets, each sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelPartition {
    pub sets: Vec<Vec<Label>>,
}

impl LabelPartition {
    /// Labels `0..C·count`, cut into `count` consecutive sets of `C`.
    pub fn consecutive(congestion: u32, count: u32) -> LabelPartition {
        let c = congestion;
        LabelPartition { sets: (0..count).map(|j| (j * c..(j + 1) * c).map(Label).collect()).collect() }
    }
}

fn check_set_sizes(sets: &[&[Label]]) -> Result<usize, LowerBoundError> {
    let c = sets.first().map_or(0, |s| s.len());
    if c < 2 || c % 2 == 1 {
        return Err(LowerBoundError::OddCongestion(c as u32));
    }
    if let Some(bad) = sets.iter().find(|s| s.len() != c) {
        return Err(LowerBoundError::SetSize { expected: c, got: bad.len() });
    }
    Ok(c)
}

/// Every union of a `C/2`-subset of `s1` with a `C/2`-subset of `s2`, in
/// lexicographic order of the chosen subsets.
pub fn interleave(s1: &[Label], s2: &[Label]) -> Result<Vec<Vec<Label>>, LowerBoundError> {
    let c = check_set_sizes(&[s1, s2])?;
    if s1.iter().any(|l| s2.contains(l)) {
        return Err(LowerBoundError::Overlap);
    }
    let halves = |s: &[Label]| s.iter().copied().combinations(c / 2).collect::<Vec<_>>();
    let (h1, h2) = (halves(s1), halves(s2));
    Ok(h1
        .iter()
        .cartesian_product(&h2)
        .map(|(a, b)| {
            let mut u: Vec<Label> = a.iter().chain(b).copied().collect();
            u.sort_unstable();
            u
        })
        .collect())
}

/// Lazily streams the Cartesian product of the interleavings of adjacent
/// pairs `(S_1, S_2), (S_3, S_4), …`.
pub fn interleavings(
    partition: &LabelPartition,
) -> Result<impl Iterator<Item = LabelPartition> + Clone, LowerBoundError> {
    if partition.sets.len() % 2 == 1 || partition.sets.is_empty() {
        return Err(LowerBoundError::OddSetCount(partition.sets.len()));
    }
    let per_pair = partition
        .sets
        .chunks(2)
        .map(|pair| interleave(&pair[0], &pair[1]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_pair
        .into_iter()
        .map(|choices| choices.into_iter())
        .multi_cartesian_product()
        .map(|sets| LabelPartition { sets }))
}

/// Size limits for [`build_lowerbound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildLimits {
    /// Largest allowed `C·2^(D+1)`.
    pub bit_cap: u32,
    pub edge_cap: u64,
}

impl Default for BuildLimits {
    fn default() -> Self {
        BuildLimits { bit_cap: 64, edge_cap: 5_000_000 }
    }
}

/// Sizes of a built instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundStats {
    /// Edge count.
    pub m_d: u64,
    pub nodes: u32,
    pub labels: u32,
    pub depth: u32,
}

/// A built instance with the labels carried by every edge.
#[derive(Clone, Debug)]
pub struct LowerBoundInstance {
    pub instance: MulticastInstance,
    pub congestion: u32,
    pub depth: u32,
    /// Labels on each graph edge, indexed by [`crate::EdgeId`].
    pub edge_labels: Vec<Vec<Label>>,
    /// Root node of each label.
    pub label_root: Vec<NodeId>,
    pub stats: LowerBoundStats,
}

/// `C choose C/2`.
pub fn half_binomial(congestion: u32) -> u128 {
    let c = u128::from(congestion);
    (0..c / 2).fold(1u128, |acc, i| acc * (c - i) / (i + 1))
}

/// Predicted `(edges, nodes)` from the size recursion, saturating.
pub fn predicted_size(congestion: u32, depth: u32) -> (u128, u128) {
    let b = half_binomial(congestion);
    let (mut m, mut n) = (1u128, 2u128);
    for d in 2..=depth {
        let pairs = 1u128 << (d - 2);
        let copies = (0..2 * pairs).try_fold(1u128, |acc, _| acc.checked_mul(b)).unwrap_or(u128::MAX);
        m = copies.saturating_mul(m).saturating_add(pairs * 2);
        n = copies.saturating_mul(n - pairs).saturating_add(pairs * 3);
    }
    (m, n)
}

struct Builder {
    uf: Vec<u32>,
    edges: Vec<(u32, u32, Vec<Label>)>,
}

impl Builder {
    fn node(&mut self) -> u32 {
        self.uf.push(self.uf.len() as u32);
        self.uf.len() as u32 - 1
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.uf[x as usize] != x {
            let up = self.uf[self.uf[x as usize] as usize];
            self.uf[x as usize] = up;
            x = up;
        }
        x
    }

    /// Glues `child` into `hub`; the hub stays the representative.
    fn merge(&mut self, hub: u32, child: u32) {
        let (h, c) = (self.find(hub), self.find(child));
        if h != c {
            self.uf[c as usize] = h;
        }
    }

    /// Builds the instance for `partition` and returns the root of each set.
    fn build(&mut self, partition: &LabelPartition) -> Vec<u32> {
        if partition.sets.len() == 1 {
            let (r, v) = (self.node(), self.node());
            self.edges.push((r, v, partition.sets[0].clone()));
            return vec![r];
        }
        let mut roots = Vec::with_capacity(partition.sets.len());
        let mut hubs = Vec::with_capacity(partition.sets.len() / 2);
        for pair in partition.sets.chunks(2) {
            let (a, b, v) = (self.node(), self.node(), self.node());
            self.edges.push((a, v, pair[0].clone()));
            self.edges.push((b, v, pair[1].clone()));
            roots.extend([a, b]);
            hubs.push(v);
        }
        for sub in interleavings(partition).expect("validated partition") {
            let sub_roots = self.build(&sub);
            for (&hub, &r) in hubs.iter().zip(&sub_roots) {
                self.merge(hub, r);
            }
        }
        roots
    }
}

/// Builds the `(C, D)` instance over labels `0..C·2^(D-1)`.
pub fn build_lowerbound(congestion: u32, depth: u32, limits: BuildLimits) -> Result<LowerBoundInstance, LowerBoundError> {
    if congestion < 2 || congestion % 2 == 1 {
        return Err(LowerBoundError::OddCongestion(congestion));
    }
    if depth == 0 {
        return Err(LowerBoundError::ZeroDepth);
    }
    let exponent = u64::from(congestion).checked_shl(depth + 1).unwrap_or(u64::MAX);
    let (edges, nodes) = predicted_size(congestion, depth);
    if depth >= 32 || exponent > u64::from(limits.bit_cap) || edges > u128::from(limits.edge_cap) {
        return Err(LowerBoundError::TooLarge {
            exponent,
            cap: limits.bit_cap,
            edges,
            edge_cap: limits.edge_cap,
            nodes,
        });
    }
    let sets = 1u32 << (depth - 1);
    let partition = LabelPartition::consecutive(congestion, sets);
    let mut b = Builder { uf: Vec::new(), edges: Vec::with_capacity(edges as usize) };
    let roots = b.build(&partition);

    // Densify representatives in order of first appearance.
    let mut dense = vec![u32::MAX; b.uf.len()];
    let mut next = 0u32;
    let mut id_of = |b: &mut Builder, x: u32| {
        let r = b.find(x) as usize;
        if dense[r] == u32::MAX {
            dense[r] = next;
            next += 1;
        }
        dense[r]
    };
    let root_ids: Vec<u32> = roots.iter().map(|&r| id_of(&mut b, r)).collect();
    let raw_edges = std::mem::take(&mut b.edges);
    let edge_list: Vec<(u32, u32, Vec<Label>)> =
        raw_edges.into_iter().map(|(u, v, l)| (id_of(&mut b, u), id_of(&mut b, v), l)).collect();
    let node_count = next;
    let graph = Graph::new(node_count, edge_list.iter().map(|&(u, v, _)| (u, v)))?;

    let label_count = congestion * sets;
    let mut label_root = vec![NodeId(0); label_count as usize];
    for (j, set) in partition.sets.iter().enumerate() {
        for l in set {
            label_root[l.0 as usize] = NodeId(root_ids[j]);
        }
    }
    let mut edge_labels = vec![Vec::new(); graph.edge_count()];
    let mut adjacency: Vec<HashMap<NodeId, Vec<NodeId>>> = vec![HashMap::new(); label_count as usize];
    for (u, v, labels) in edge_list {
        let (u, v) = (NodeId(u), NodeId(v));
        let e = graph.edge_id(u, v).expect("edge was just added");
        for l in &labels {
            let adj = &mut adjacency[l.0 as usize];
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        edge_labels[e.index()] = labels;
    }
    let trees = adjacency
        .iter()
        .enumerate()
        .map(|(l, adj)| {
            let pairs = bfs_tree_from(label_root[l], adj);
            MulticastTree::from_parent_map(TreeId(l as u32), label_root[l], pairs)
                .map_err(|reason| InstanceError::Tree { tree: TreeId(l as u32), reason })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let instance = MulticastInstance::new(graph, trees)?;
    let stats = LowerBoundStats { m_d: instance.graph().edge_count() as u64, nodes: node_count, labels: label_count, depth };
    Ok(LowerBoundInstance { instance, congestion, depth, edge_labels, label_root, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    fn labels(s: &str) -> Vec<Label> {
        s.bytes().map(|b| Label(u32::from(b - b'A'))).collect()
    }

    fn names(sets: &[Vec<Label>]) -> Vec<String> {
        sets.iter().map(|s| s.iter().map(|l| (b'A' + l.0 as u8) as char).collect()).collect()
    }

    #[test]
    fn interleave_two_by_two() {
        let out = interleave(&labels("ST"), &labels("UV")).unwrap();
        assert_eq!(names(&out), ["SU", "SV", "TU", "TV"]);
    }

    #[test]
    fn interleave_sizes() {
        let c4 = interleave(&labels("ABCD"), &labels("EFGH")).unwrap();
        assert_eq!(c4.len(), 36);
        // Oracle: every 4-subset of the 8 labels with two from each side.
        let all: Vec<Label> = labels("ABCDEFGH");
        let mut oracle: Vec<Vec<Label>> = (0u32..256)
            .filter(|m| m.count_ones() == 4 && (m & 0x0f).count_ones() == 2)
            .map(|m| (0..8).filter(|i| m >> i & 1 == 1).map(|i| all[i]).collect())
            .collect();
        oracle.sort();
        let mut got = c4.clone();
        got.sort();
        assert_eq!(got, oracle);
        assert!(c4.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn interleave_rejects_bad_input() {
        assert_eq!(interleave(&labels("STU"), &labels("VWX")), Err(LowerBoundError::OddCongestion(3)));
        assert_eq!(interleave(&labels("ST"), &labels("TU")), Err(LowerBoundError::Overlap));
    }

    #[test]
    fn sixteen_interleavings_of_four_sets() {
        let p = LabelPartition { sets: vec![labels("ST"), labels("UV"), labels("WX"), labels("YZ")] };
        let all: Vec<Vec<String>> = interleavings(&p).unwrap().map(|q| names(&q.sets)).collect();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], ["SU", "WY"]);
        assert_eq!(all[1], ["SU", "WZ"]);
        assert_eq!(all[4], ["SV", "WY"]);
        assert_eq!(all[15], ["TV", "XZ"]);
    }

    #[test]
    fn interleavings_of_a_pair_is_interleave() {
        let p = LabelPartition { sets: vec![labels("ST"), labels("UV")] };
        let via: Vec<Vec<Vec<Label>>> = interleavings(&p).unwrap().map(|q| q.sets).collect();
        let direct: Vec<Vec<Vec<Label>>> =
            interleave(&labels("ST"), &labels("UV")).unwrap().into_iter().map(|s| vec![s]).collect();
        assert_eq!(via, direct);
    }

    #[test]
    fn eight_sets_give_256() {
        assert_eq!(interleavings(&LabelPartition::consecutive(2, 8)).unwrap().count(), 256);
    }

    #[test]
    fn recursion_values() {
        assert_eq!(predicted_size(2, 1).0, 1);
        assert_eq!(predicted_size(2, 2).0, 6);
        assert_eq!(predicted_size(2, 3).0, 100);
        assert_eq!(predicted_size(4, 2).0, 38);
        assert_eq!(predicted_size(4, 3).0, 49252);
        assert_eq!(half_binomial(6), 20);
    }

    #[test]
    fn base_case() {
        let lb = build_lowerbound(2, 1, BuildLimits::default()).unwrap();
        assert_eq!(lb.instance.graph().edge_count(), 1);
        assert_eq!(lb.instance.node_count(), 2);
        assert_eq!(lb.instance.trees().len(), 2);
        assert!(lb.instance.trees().iter().all(|t| t.root() == lb.label_root[0]));
    }

    #[test]
    fn built_sizes_match_recursion() {
        for (c, d) in [(2, 1), (2, 2), (2, 3), (4, 2)] {
            let lb = build_lowerbound(c, d, BuildLimits::default()).unwrap();
            let (m, n) = predicted_size(c, d);
            assert_eq!(u128::from(lb.stats.m_d), m, "({c},{d})");
            assert_eq!(u128::from(lb.stats.nodes), n, "({c},{d})");
            assert!(validate_instance(&lb.instance.to_file()).is_valid());
            let metrics = lb.instance.metrics();
            assert_eq!((metrics.congestion, metrics.dilation), (c, d));
        }
    }

    #[test]
    fn roots_have_one_edge() {
        let lb = build_lowerbound(2, 3, BuildLimits::default()).unwrap();
        let g = lb.instance.graph();
        for r in &lb.label_root {
            assert_eq!(g.neighbors(*r).len(), 1);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(build_lowerbound(3, 2, BuildLimits::default()).unwrap_err(), LowerBoundError::OddCongestion(3));
        assert_eq!(build_lowerbound(2, 0, BuildLimits::default()).unwrap_err(), LowerBoundError::ZeroDepth);
        match build_lowerbound(4, 4, BuildLimits::default()) {
            Err(LowerBoundError::TooLarge { exponent: 128, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(build_lowerbound(2, 5, BuildLimits::default()), Err(LowerBoundError::TooLarge { .. })));
        let tight = BuildLimits { edge_cap: 99, ..BuildLimits::default() };
        assert!(matches!(build_lowerbound(2, 3, tight), Err(LowerBoundError::TooLarge { edges: 100, .. })));
    }
}
