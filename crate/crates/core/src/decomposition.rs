//! Path decompositions of rooted trees.
//!
//! A decomposition partitions a tree's edges into downward paths. Heavy-path
//! and rank-based decompositions both pick one "preferred" child per internal
//! node; maximal preferred chains, extended upward by the edge into their top
//! node, are the paths. [`shorten`] cuts every path into chunks of at most
//! `ℓ` edges, which is what the frame scheduler routes one level at a time.
//!
//! The level of a path is 1 plus the number of other paths met on the walk
//! from the tree root down to the path's top node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{MulticastTree, NodeId};
use crate::math;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    Heavy,
    Rank,
    ShortRefined,
}

impl fmt::Display for DecompositionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecompositionKind::Heavy => "heavy",
            DecompositionKind::Rank => "rank",
            DecompositionKind::ShortRefined => "short-refined",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompositionError {
    #[error("chunk length must be at least 1")]
    ZeroChunkLength,
    #[error("decomposition does not match the tree: {0}")]
    Mismatch(String),
}

/// A partition of a tree's edges into downward paths, with levels.
#[derive(Clone, Debug)]
pub struct PathDecomposition {
    kind: DecompositionKind,
    /// Node sequences, top node first.
    paths: Vec<Vec<NodeId>>,
    /// The same sequences as local indices of the source tree.
    local_paths: Vec<Vec<u32>>,
    levels: Vec<u32>,
    /// Path index of the edge from each local node to its parent.
    path_of_local: Vec<u32>,
}

impl PartialEq for PathDecomposition {
    /// Two decompositions are equal when they have the same set of paths.
    fn eq(&self, other: &Self) -> bool {
        self.path_set() == other.path_set()
    }
}

impl PathDecomposition {
    /// Builds the decomposition induced by one preferred child per node.
    pub(crate) fn from_preferred(
        tree: &MulticastTree,
        preferred: &[u32],
        kind: DecompositionKind,
    ) -> PathDecomposition {
        let n = tree.len();
        let mut local_paths = Vec::new();
        let mut path_of_local = vec![NONE; n];
        for v in 0..n {
            let parent = tree.parent_local(v);
            let starts_path = match parent {
                None => preferred[v] != NONE,
                Some(p) => preferred[p] != v as u32,
            };
            if !starts_path {
                continue;
            }
            let index = local_paths.len() as u32;
            let mut path = Vec::new();
            if let Some(p) = parent {
                path.push(p as u32);
                path_of_local[v] = index;
            }
            path.push(v as u32);
            let mut cur = v;
            while preferred[cur] != NONE {
                cur = preferred[cur] as usize;
                path_of_local[cur] = index;
                path.push(cur as u32);
            }
            local_paths.push(path);
        }
        Self::assemble(tree, kind, local_paths, path_of_local)
    }

    fn assemble(
        tree: &MulticastTree,
        kind: DecompositionKind,
        local_paths: Vec<Vec<u32>>,
        path_of_local: Vec<u32>,
    ) -> PathDecomposition {
        let paths = local_paths
            .iter()
            .map(|p| p.iter().map(|&l| tree.node(l as usize)).collect())
            .collect();
        let mut d = PathDecomposition { kind, paths, local_paths, levels: Vec::new(), path_of_local };
        d.levels = d.compute_levels();
        d
    }

    /// Paths are stored so that the path holding the edge into a path's top
    /// node always comes earlier; one forward pass suffices.
    fn compute_levels(&self) -> Vec<u32> {
        let mut levels = vec![0u32; self.local_paths.len()];
        for (i, p) in self.local_paths.iter().enumerate() {
            let top = p[0] as usize;
            levels[i] = match self.path_of_local[top] {
                NONE => 1,
                above => {
                    debug_assert!((above as usize) < i);
                    levels[above as usize] + 1
                }
            };
        }
        levels
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    pub fn paths(&self) -> &[Vec<NodeId>] {
        &self.paths
    }

    pub fn local_paths(&self) -> &[Vec<u32>] {
        &self.local_paths
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn level(&self, path: usize) -> u32 {
        self.levels[path]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Path holding the edge from local node `local` to its parent.
    pub fn path_of_local(&self, local: usize) -> Option<usize> {
        match self.path_of_local[local] {
            NONE => None,
            p => Some(p as usize),
        }
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn longest_path(&self) -> usize {
        self.local_paths.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// Paths as a set of node sequences, for order-insensitive comparison.
    pub fn path_set(&self) -> BTreeSet<Vec<NodeId>> {
        self.paths.iter().cloned().collect()
    }

    pub fn to_file(&self) -> DecompositionFile {
        DecompositionFile {
            paths: self.paths.iter().map(|p| p.iter().map(|v| v.0).collect()).collect(),
            levels: self.levels.clone(),
        }
    }

    /// Rebuilds a decomposition of `tree` from explicit node paths, checking
    /// that they partition the tree's edges into downward chains.
    pub fn from_paths(
        tree: &MulticastTree,
        kind: DecompositionKind,
        mut paths: Vec<Vec<NodeId>>,
    ) -> Result<PathDecomposition, DecompositionError> {
        // Order paths by the BFS position of their first edge's child so the
        // level pass sees parents first.
        let first_child = |p: &Vec<NodeId>| p.get(1).and_then(|&v| tree.local_index(v)).unwrap_or(usize::MAX);
        paths.sort_by_key(first_child);
        let mut path_of_local = vec![NONE; tree.len()];
        let mut local_paths = Vec::with_capacity(paths.len());
        for (i, p) in paths.iter().enumerate() {
            if p.len() < 2 {
                return Err(DecompositionError::Mismatch(format!("path {i} has no edges")));
            }
            let mut lp = Vec::with_capacity(p.len());
            for (j, &v) in p.iter().enumerate() {
                let l = tree
                    .local_index(v)
                    .ok_or_else(|| DecompositionError::Mismatch(format!("node {v} not in tree")))?;
                if j > 0 {
                    if tree.parent_local(l) != Some(lp[j - 1] as usize) {
                        return Err(DecompositionError::Mismatch(format!(
                            "path {i}: {} is not the parent of {v}",
                            p[j - 1]
                        )));
                    }
                    if path_of_local[l] != NONE {
                        return Err(DecompositionError::Mismatch(format!("edge into {v} covered twice")));
                    }
                    path_of_local[l] = i as u32;
                }
                lp.push(l as u32);
            }
            local_paths.push(lp);
        }
        if let Some(l) = (1..tree.len()).find(|&l| path_of_local[l] == NONE) {
            return Err(DecompositionError::Mismatch(format!("edge into {} uncovered", tree.node(l))));
        }
        Ok(Self::assemble(tree, kind, local_paths, path_of_local))
    }
}

/// JSON form: `{"paths": [[nodes...],...], "levels": [int,...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub paths: Vec<Vec<u32>>,
    pub levels: Vec<u32>,
}

/// Ranks indexed by the tree's local node index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankMap {
    ranks: Vec<u32>,
}

impl RankMap {
    pub fn rank_local(&self, local: usize) -> u32 {
        self.ranks[local]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn max_rank(&self) -> u32 {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    pub fn to_map(&self, tree: &MulticastTree) -> BTreeMap<NodeId, u32> {
        self.ranks.iter().enumerate().map(|(l, &r)| (tree.node(l), r)).collect()
    }
}

/// Rank of a node given its children's ranks: the maximum, plus one when the
/// maximum is attained more than once; 0 for a leaf.
pub fn rank_from_children(child_ranks: impl IntoIterator<Item = u32>) -> u32 {
    let mut best = None;
    let mut ties = 0;
    for r in child_ranks {
        match best {
            Some(b) if r < b => {}
            Some(b) if r == b => ties += 1,
            _ => {
                best = Some(r);
                ties = 1;
            }
        }
    }
    match best {
        None => 0,
        Some(b) if ties > 1 => b + 1,
        Some(b) => b,
    }
}

/// Index of the first maximum under `key`; children are ordered by node id,
/// so ties go to the smallest id.
fn argmax_first(children: &[u32], key: impl Fn(u32) -> u32) -> u32 {
    let mut best = NONE;
    let mut best_key = 0;
    for &c in children {
        let k = key(c);
        if best == NONE || k > best_key {
            best = c;
            best_key = k;
        }
    }
    best
}

/// Heavy-path decomposition: each internal node prefers the child with the
/// largest subtree (smallest node id on ties).
pub fn heavy_path_decomposition(tree: &MulticastTree) -> PathDecomposition {
    let size = tree.subtree_sizes();
    let preferred: Vec<u32> =
        (0..tree.len()).map(|v| argmax_first(tree.children_local(v), |c| size[c as usize])).collect();
    PathDecomposition::from_preferred(tree, &preferred, DecompositionKind::Heavy)
}

/// Ranks computed bottom-up.
pub fn compute_ranks(tree: &MulticastTree) -> RankMap {
    let mut ranks = vec![0u32; tree.len()];
    for v in tree.post_order_locals() {
        ranks[v] = rank_from_children(tree.children_local(v).iter().map(|&c| ranks[c as usize]));
    }
    RankMap { ranks }
}

/// Preferred child of each local node under the rank rule (highest rank,
/// smallest node id on ties); `u32::MAX` for leaves.
pub fn rank_preferred_children(tree: &MulticastTree, ranks: &RankMap) -> Vec<u32> {
    (0..tree.len())
        .map(|v| argmax_first(tree.children_local(v), |c| ranks.ranks[c as usize]))
        .collect()
}

/// Rank-based decomposition: each internal node prefers its highest-rank child.
pub fn rank_decomposition(tree: &MulticastTree) -> (PathDecomposition, RankMap) {
    let ranks = compute_ranks(tree);
    let preferred = rank_preferred_children(tree, &ranks);
    (PathDecomposition::from_preferred(tree, &preferred, DecompositionKind::Rank), ranks)
}

/// Cuts each path, from its top, into chunks of `chunk_len` edges (the last
/// one possibly shorter) and recomputes levels.
pub fn shorten(
    decomposition: &PathDecomposition,
    chunk_len: u32,
) -> Result<PathDecomposition, DecompositionError> {
    if chunk_len == 0 {
        return Err(DecompositionError::ZeroChunkLength);
    }
    let step = chunk_len as usize;
    let mut local_paths = Vec::new();
    let mut paths = Vec::new();
    let mut path_of_local = vec![NONE; decomposition.path_of_local.len()];
    for (p, nodes) in decomposition.local_paths.iter().zip(&decomposition.paths) {
        let edges = p.len() - 1;
        let mut start = 0;
        while start < edges {
            let end = (start + step).min(edges);
            let index = local_paths.len() as u32;
            for &l in &p[start + 1..=end] {
                path_of_local[l as usize] = index;
            }
            local_paths.push(p[start..=end].to_vec());
            paths.push(nodes[start..=end].to_vec());
            start = end;
        }
    }
    let mut d = PathDecomposition {
        kind: DecompositionKind::ShortRefined,
        paths,
        local_paths,
        levels: Vec::new(),
        path_of_local,
    };
    d.levels = d.compute_levels();
    Ok(d)
}

/// Default chunk length `⌈log2 n⌉` (at least 1).
pub fn default_chunk_len(node_count: u32) -> u32 {
    math::log_n(u64::from(node_count))
}

/// The `k` achieved by heavy + [`shorten`]: `⌈log2 n⌉ + 1`.
pub fn short_k(node_count: u32) -> u32 {
    math::ceil_log2(u64::from(node_count)) + 1
}

/// Heavy-path decomposition cut into chunks of `chunk_len`.
pub fn short_decomposition(tree: &MulticastTree, chunk_len: u32) -> PathDecomposition {
    shorten(&heavy_path_decomposition(tree), chunk_len).expect("chunk length is positive")
}

/// Result of [`verify_short`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShortReport {
    /// Largest number of paths met by a root-to-leaf walk.
    pub max_intersections: u32,
    pub worst_leaf: Option<NodeId>,
    pub depth: u32,
    pub chunk_len: u32,
    pub k: u32,
    /// `max_intersections <= depth / chunk_len + k`.
    pub pass: bool,
}

/// Counts, for every root-to-leaf walk, how many decomposition paths it
/// meets, and compares the maximum to `depth/ℓ + k`.
pub fn verify_short(decomposition: &PathDecomposition, tree: &MulticastTree, chunk_len: u32, k: u32) -> ShortReport {
    assert!(chunk_len > 0);
    // A walk meets a new path exactly where the path id changes along it.
    let mut met = vec![0u32; tree.len()];
    for v in 1..tree.len() {
        let p = tree.parent_local(v).expect("non-root");
        let here = decomposition.path_of_local[v];
        let above = if p == 0 { NONE } else { decomposition.path_of_local[p] };
        met[v] = met[p] + u32::from(here != above);
    }
    let (max_intersections, worst_leaf) = tree
        .leaves_local()
        .map(|l| (met[l], tree.node(l)))
        .max_by_key(|&(m, v)| (m, std::cmp::Reverse(v)))
        .map_or((0, None), |(m, v)| (m, Some(v)));
    let depth = tree.depth();
    let pass = u64::from(max_intersections) * u64::from(chunk_len)
        <= u64::from(depth) + u64::from(k) * u64::from(chunk_len);
    ShortReport { max_intersections, worst_leaf, depth, chunk_len, k, pass }
}
