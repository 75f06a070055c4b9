//! Seeded instance generators.
//!
//! * [`gen_random_instance`]: trees grown over a shared random connected graph,
//!   depth bounded by a target.
//! * [`gen_layered_instance`]: exactly `C` trees of depth exactly `D` over a
//!   layered graph, all crossing one bottleneck edge, so congestion is exactly
//!   `C`. Used by the benchmark grid.
//! * [`random_tree`]: standalone rooted trees of several shapes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{Graph, MulticastInstance, MulticastTree, NodeId, TreeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(u32),
    #[error("need at least one tree")]
    NoTrees,
    #[error("target depth must be at least 1")]
    ZeroDepth,
    #[error("target depth {depth} cannot fit in {nodes} nodes (needs depth < node count)")]
    DepthTooLarge { depth: u32, nodes: u32 },
    #[error("congestion must be at least 1")]
    ZeroCongestion,
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance: a connected random host graph with about `2n` edges and
/// `tree_count` trees grown from random roots along host edges, each of depth
/// at most `target_depth`.
pub fn gen_random_instance(
    node_count: u32,
    tree_count: u32,
    target_depth: u32,
    seed: u64,
) -> Result<MulticastInstance, GenError> {
    if node_count < 2 {
        return Err(GenError::TooFewNodes(node_count));
    }
    if tree_count == 0 {
        return Err(GenError::NoTrees);
    }
    if target_depth == 0 {
        return Err(GenError::ZeroDepth);
    }
    if target_depth >= node_count {
        return Err(GenError::DepthTooLarge { depth: target_depth, nodes: node_count });
    }
    let mut rng = rng_for(seed);
    let n = node_count as usize;

    // Random spanning tree over a shuffled order keeps the host connected.
    let mut order: Vec<u32> = (0..node_count).collect();
    order.shuffle(&mut rng);
    let mut edge_set: HashSet<(u32, u32)> = HashSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        edge_set.insert((a.min(b), a.max(b)));
    }
    for _ in 0..n {
        let a = rng.gen_range(0..node_count);
        let b = rng.gen_range(0..node_count);
        if a != b {
            edge_set.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges: Vec<(u32, u32)> = edge_set.into_iter().collect();
    edges.sort_unstable();
    let graph = Graph::new(node_count, edges).expect("generated edges are simple");

    let max_size = n.min(8 * target_depth as usize + 2);
    let mut trees = Vec::with_capacity(tree_count as usize);
    for t in 0..tree_count {
        let root = NodeId(rng.gen_range(0..node_count));
        let size = rng.gen_range(2..=max_size.max(2));
        let mut depth_of = vec![u32::MAX; n];
        depth_of[root.index()] = 0;
        let mut frontier = vec![root];
        let mut parent = Vec::new();
        while parent.len() + 1 < size && !frontier.is_empty() {
            let fi = rng.gen_range(0..frontier.len());
            let u = frontier[fi];
            let candidates: Vec<NodeId> = graph
                .neighbors(u)
                .iter()
                .map(|&(w, _)| w)
                .filter(|w| depth_of[w.index()] == u32::MAX)
                .collect();
            if candidates.is_empty() {
                frontier.swap_remove(fi);
                continue;
            }
            let w = *candidates.choose(&mut rng).expect("non-empty");
            depth_of[w.index()] = depth_of[u.index()] + 1;
            parent.push((w, u));
            if depth_of[w.index()] < target_depth {
                frontier.push(w);
            }
        }
        trees.push(MulticastTree::from_parent_map(TreeId(t), root, parent).expect("grown tree"));
    }
    Ok(MulticastInstance::new(graph, trees).expect("trees use host edges"))
}

/// Parameters for [`gen_layered_instance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayeredParams {
    pub node_count: u32,
    pub congestion: u32,
    pub depth: u32,
    /// Probability that a tree node adopts each additional downward neighbor.
    pub branch_prob: f64,
    /// Downward edges per node between consecutive layers.
    pub fanout: u32,
    pub seed: u64,
}

impl LayeredParams {
    pub fn new(node_count: u32, congestion: u32, depth: u32, seed: u64) -> Self {
        LayeredParams { node_count, congestion, depth, branch_prob: 0.1, fanout: 3, seed }
    }
}

/// Layered instance with congestion exactly `congestion` and dilation exactly
/// `depth`.
///
/// Layer 0 holds the roots, layers 1 and 2 are single hub nodes joined by the
/// bottleneck edge every tree uses; deeper layers split the remaining nodes
/// evenly. Each tree is a random downward spine reaching the last layer plus
/// subcritical random branches.
pub fn gen_layered_instance(params: LayeredParams) -> Result<MulticastInstance, GenError> {
    let LayeredParams { node_count, congestion, depth, branch_prob, fanout, seed } = params;
    if node_count < 2 {
        return Err(GenError::TooFewNodes(node_count));
    }
    if congestion == 0 {
        return Err(GenError::ZeroCongestion);
    }
    if depth == 0 {
        return Err(GenError::ZeroDepth);
    }
    if depth >= node_count {
        return Err(GenError::DepthTooLarge { depth, nodes: node_count });
    }
    let mut rng = rng_for(seed);

    // Layer widths.
    let layers = depth as usize + 1;
    let mut widths = vec![1usize; layers];
    let n = node_count as usize;
    if depth == 1 {
        widths[1] = n - 1;
    } else {
        // Roots share the even split; layers 1 and 2 are hubs.
        let spare = n - layers;
        let even = spare / (layers - 2);
        widths[0] += even;
        let mut left = spare - even;
        let deep = layers - 3;
        for (i, w) in widths.iter_mut().enumerate().skip(3) {
            let extra = if deep == 0 { 0 } else { left / (layers - i) };
            *w += extra;
            left -= extra;
        }
        widths[0] += left;
    }
    let mut start = vec![0u32; layers + 1];
    for i in 0..layers {
        start[i + 1] = start[i] + widths[i] as u32;
    }
    let layer_nodes = |i: usize| start[i]..start[i + 1];

    // Downward adjacency between consecutive layers.
    let mut down: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..layers - 1 {
        let next: Vec<u32> = layer_nodes(i + 1).collect();
        let mut has_parent = vec![false; next.len()];
        for u in layer_nodes(i) {
            let k = (fanout as usize).clamp(1, next.len());
            let picks: Vec<u32> = next.choose_multiple(&mut rng, k).copied().collect();
            for w in picks {
                has_parent[(w - start[i + 1]) as usize] = true;
                down[u as usize].push(w);
            }
        }
        for (j, &w) in next.iter().enumerate() {
            if !has_parent[j] {
                let u = rng.gen_range(start[i]..start[i + 1]);
                down[u as usize].push(w);
            }
        }
    }
    for (u, list) in down.iter_mut().enumerate() {
        list.sort_unstable();
        list.dedup();
        for &w in list.iter() {
            edges.push((u as u32, w));
        }
    }
    let graph = Graph::new(node_count, edges).expect("layered edges are simple");

    let hub_edge_child = start[1];
    let mut trees = Vec::with_capacity(congestion as usize);
    let mut in_tree = vec![false; n];
    for t in 0..congestion {
        let root = if depth == 1 { 0 } else { rng.gen_range(layer_nodes(0)) };
        let mut parent: Vec<(NodeId, NodeId)> = Vec::new();
        let mut touched = vec![root];
        in_tree[root as usize] = true;

        // Spine: root -> hub(s) -> random downward walk to the last layer.
        let mut spine = vec![root];
        let mut cur = root;
        for layer in 1..layers {
            let next = if layer == 1 {
                hub_edge_child
            } else if depth >= 2 && layer == 2 {
                start[2]
            } else {
                *down[cur as usize].choose(&mut rng).expect("every upper node has a down edge")
            };
            parent.push((NodeId(next), NodeId(cur)));
            in_tree[next as usize] = true;
            touched.push(next);
            spine.push(next);
            cur = next;
        }

        // Branches, layer by layer so every node keeps a single parent.
        let mut level: Vec<u32> = vec![root];
        for layer in 0..layers - 1 {
            let mut next_level = vec![spine[layer + 1]];
            for &u in &level {
                for &w in &down[u as usize] {
                    if !in_tree[w as usize] && rng.gen_bool(branch_prob) {
                        in_tree[w as usize] = true;
                        touched.push(w);
                        parent.push((NodeId(w), NodeId(u)));
                        next_level.push(w);
                    }
                }
            }
            level = next_level;
        }
        for v in touched {
            in_tree[v as usize] = false;
        }
        trees.push(
            MulticastTree::from_parent_map(TreeId(t), NodeId(root), parent).expect("layered tree"),
        );
    }
    Ok(MulticastInstance::new(graph, trees).expect("trees use layered edges"))
}

/// Shapes produced by [`random_tree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    /// Each new node attaches to a uniformly random earlier node.
    Recursive,
    /// Each new node attaches to one of the most recent few nodes (deep).
    Deep,
    /// Each new node attaches to a random node with fewer than two children.
    Binary,
    /// A spine with pendant leaves.
    Caterpillar,
}

impl TreeShape {
    pub const ALL: [TreeShape; 4] =
        [TreeShape::Recursive, TreeShape::Deep, TreeShape::Binary, TreeShape::Caterpillar];
}

/// Random rooted tree on nodes `0..node_count`, rooted at node 0.
pub fn random_tree(node_count: u32, shape: TreeShape, seed: u64) -> MulticastTree {
    assert!(node_count >= 1);
    let mut rng = rng_for(seed);
    let mut parent = Vec::with_capacity(node_count as usize);
    let mut child_count = vec![0u32; node_count as usize];
    let mut open: Vec<u32> = vec![0];
    for v in 1..node_count {
        let p = match shape {
            TreeShape::Recursive => rng.gen_range(0..v),
            TreeShape::Deep => rng.gen_range(v.saturating_sub(3)..v),
            TreeShape::Binary => {
                let i = rng.gen_range(0..open.len());
                let p = open[i];
                if child_count[p as usize] == 1 {
                    open.swap_remove(i);
                }
                open.push(v);
                p
            }
            TreeShape::Caterpillar => {
                if rng.gen_bool(0.5) {
                    open[open.len() - 1]
                } else {
                    let p = open[open.len() - 1];
                    open.push(v);
                    p
                }
            }
        };
        child_count[p as usize] += 1;
        parent.push((NodeId(v), NodeId(p)));
    }
    MulticastTree::from_parent_map(TreeId(0), NodeId(0), parent).expect("generated tree")
}

/// Complete binary tree with `levels` levels of nodes (`2^levels - 1` nodes),
/// in heap numbering.
pub fn complete_binary_tree(levels: u32) -> MulticastTree {
    assert!(levels >= 1);
    let n = (1u32 << levels) - 1;
    MulticastTree::from_parent_map(TreeId(0), NodeId(0), (1..n).map(|v| (NodeId(v), NodeId((v - 1) / 2))))
        .expect("heap tree")
}

/// Wraps a standalone tree in an instance whose graph is exactly the tree.
pub fn single_tree_instance(tree: MulticastTree, node_count: u32) -> MulticastInstance {
    let edges: Vec<(u32, u32)> = tree.edges().map(|(p, c)| (p.0, c.0)).collect();
    let graph = Graph::new(node_count, edges).expect("tree edges are simple");
    MulticastInstance::new(graph, vec![tree]).expect("tree fits its own graph")
}
