//! What each node knows at the start: the trees it belongs to, its
//! neighbors in each, optionally its depth, and the shared random seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{MulticastInstance, NodeId, TreeId};

/// A node's view of one tree it belongs to.
#[derive(Clone, Debug)]
pub(crate) struct Membership {
    pub tree: TreeId,
    pub root: bool,
    /// Neighbors in this tree, sorted.
    pub neighbors: Vec<NodeId>,
    pub depth: Option<u32>,
}

/// Per node, its memberships sorted by tree id. Single-node trees are
/// skipped: they have no edges and need no communication.
pub(crate) fn memberships(instance: &MulticastInstance, depths_known: bool) -> Vec<Vec<Membership>> {
    let mut per_node: Vec<Vec<Membership>> = vec![Vec::new(); instance.node_count() as usize];
    for tree in instance.trees() {
        if tree.len() < 2 {
            continue;
        }
        for l in 0..tree.len() {
            let mut neighbors: Vec<NodeId> = tree.children_local(l).iter().map(|&c| tree.node(c as usize)).collect();
            if let Some(p) = tree.parent_local(l) {
                neighbors.push(tree.node(p));
            }
            neighbors.sort_unstable();
            per_node[tree.node(l).index()].push(Membership {
                tree: tree.id(),
                root: l == 0,
                neighbors,
                depth: depths_known.then(|| tree.depth_local(l)),
            });
        }
    }
    for list in &mut per_node {
        list.sort_by_key(|m| m.tree);
    }
    per_node
}

/// Distinct neighbors of a node over all its memberships, sorted, and for
/// each of them the memberships using that edge (in tree-id order).
pub(crate) fn edge_memberships(list: &[Membership]) -> (Vec<NodeId>, Vec<Vec<usize>>) {
    let mut neighbors: Vec<NodeId> = list.iter().flat_map(|m| m.neighbors.iter().copied()).collect();
    neighbors.sort_unstable();
    neighbors.dedup();
    let mut on_edge = vec![Vec::new(); neighbors.len()];
    for (s, m) in list.iter().enumerate() {
        for v in &m.neighbors {
            on_edge[neighbors.binary_search(v).expect("collected above")].push(s);
        }
    }
    (neighbors, on_edge)
}

/// Random draws every node can compute from the shared seed.
pub(crate) const PURPOSE_CONVERGECAST: u64 = 1;
pub(crate) const PURPOSE_MULTICAST: u64 = 2;

/// Offset of `tree` uniform in `[0, range)`, identical at every node.
pub(crate) fn shared_offset(seed: u64, purpose: u64, tree: TreeId, range: u32) -> u32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(u64::from(tree.0));
    rng.gen_range(0..range.max(1))
}
