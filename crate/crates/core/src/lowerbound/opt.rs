//! Exact minimum schedule length for toy instances.
//!
//! Breadth-first over rounds. A state is the set of (tree, node) pairs that
//! hold their message. Each round every edge with a useful send makes one;
//! idling is never better because knowledge only grows. States contained in
//! another state of the same round are dropped.

use std::collections::HashSet;

use serde::Serialize;

use super::LowerBoundError;
use crate::instance::MulticastInstance;

pub const OPT_MAX_EDGES: usize = 12;
pub const OPT_MAX_MESSAGES: usize = 6;
pub const OPT_MAX_HORIZON: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome", content = "length")]
pub enum OptOutcome {
    Optimal(u32),
    ExceedsHorizon,
}

/// Smallest valid schedule length, if it is at most `horizon`.
pub fn exhaustive_opt(instance: &MulticastInstance, horizon: u32) -> Result<OptOutcome, LowerBoundError> {
    let trees = instance.trees();
    let used_edges: Vec<u32> = instance.edge_loads().into_iter().filter(|&l| l > 0).collect();
    if trees.len() > OPT_MAX_MESSAGES {
        return Err(LowerBoundError::OptGuard(format!("{} messages (max {OPT_MAX_MESSAGES})", trees.len())));
    }
    if used_edges.len() > OPT_MAX_EDGES {
        return Err(LowerBoundError::OptGuard(format!("{} edges (max {OPT_MAX_EDGES})", used_edges.len())));
    }
    if horizon > OPT_MAX_HORIZON {
        return Err(LowerBoundError::OptGuard(format!("horizon {horizon} (max {OPT_MAX_HORIZON})")));
    }

    // Bit of each (tree, local node).
    let mut base = Vec::with_capacity(trees.len());
    let mut bits = 0usize;
    for t in trees {
        base.push(bits);
        bits += t.len();
    }
    debug_assert!(bits <= 128);
    let bit = |t: usize, l: usize| 1u128 << (base[t] + l);
    let mut moves: Vec<Vec<(u128, u128)>> = vec![Vec::new(); instance.graph().edge_count()];
    let mut start = 0u128;
    let mut goal = 0u128;
    for (t, tree) in trees.iter().enumerate() {
        start |= bit(t, 0);
        for l in tree.leaves_local() {
            goal |= bit(t, l);
        }
        for l in 1..tree.len() {
            let p = tree.parent_local(l).expect("non-root");
            moves[instance.parent_edge(t, l).index()].push((bit(t, p), bit(t, l)));
        }
    }
    moves.retain(|m| !m.is_empty());
    if start & goal == goal {
        return Ok(OptOutcome::Optimal(0));
    }

    let mut frontier = vec![start];
    for round in 1..=horizon {
        let mut next: HashSet<u128> = HashSet::new();
        for &state in &frontier {
            let options: Vec<Vec<u128>> = moves
                .iter()
                .map(|m| m.iter().filter(|&&(from, to)| state & from != 0 && state & to == 0).map(|&(_, to)| to).collect())
                .filter(|o: &Vec<u128>| !o.is_empty())
                .collect();
            expand(state, &options, &mut next);
        }
        if next.iter().any(|&s| s & goal == goal) {
            return Ok(OptOutcome::Optimal(round));
        }
        frontier = prune_dominated(next);
    }
    Ok(OptOutcome::ExceedsHorizon)
}

fn expand(state: u128, options: &[Vec<u128>], out: &mut HashSet<u128>) {
    match options.split_first() {
        None => {
            out.insert(state);
        }
        Some((first, rest)) => {
            for &to in first {
                expand(state | to, rest, out);
            }
        }
    }
}

/// Keeps only states not contained in another state.
fn prune_dominated(states: HashSet<u128>) -> Vec<u128> {
    let mut sorted: Vec<u128> = states.into_iter().collect();
    sorted.sort_unstable_by_key(|s| (std::cmp::Reverse(s.count_ones()), *s));
    let mut kept: Vec<u128> = Vec::new();
    for s in sorted {
        if !kept.iter().any(|&k| s & k == s) {
            kept.push(s);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::congested_edge_instance;
    use crate::instance::{Graph, MulticastTree, NodeId, TreeId};
    use crate::lowerbound::{build_lowerbound, BuildLimits};
    use crate::schedule::simulate;
    use crate::schedulers::greedy_schedule;

    fn single_edge(c: u32) -> MulticastInstance {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let trees = (0..c).map(|i| MulticastTree::path(TreeId(i), &[NodeId(0), NodeId(1)]).unwrap()).collect();
        MulticastInstance::new(g, trees).unwrap()
    }

    #[test]
    fn single_edge_needs_c_rounds() {
        for c in 1..=6 {
            assert_eq!(exhaustive_opt(&single_edge(c), 8).unwrap(), OptOutcome::Optimal(c));
        }
        assert_eq!(exhaustive_opt(&single_edge(6), 5).unwrap(), OptOutcome::ExceedsHorizon);
    }

    #[test]
    fn congested_edge_is_two() {
        assert_eq!(exhaustive_opt(&congested_edge_instance(), 8).unwrap(), OptOutcome::Optimal(2));
    }

    #[test]
    fn lower_bound_two_two() {
        let lb = build_lowerbound(2, 2, BuildLimits::default()).unwrap();
        let OptOutcome::Optimal(opt) = exhaustive_opt(&lb.instance, 8).unwrap() else { panic!() };
        assert!(opt >= 2);
        let greedy = simulate(&lb.instance, &greedy_schedule(&lb.instance)).length.unwrap();
        assert!(opt <= greedy);
    }

    #[test]
    fn path_needs_its_depth() {
        let g = Graph::new(5, (0..4).map(|i| (i, i + 1))).unwrap();
        let nodes: Vec<NodeId> = (0..5).map(NodeId).collect();
        let inst = MulticastInstance::new(g, vec![MulticastTree::path(TreeId(0), &nodes).unwrap()]).unwrap();
        assert_eq!(exhaustive_opt(&inst, 8).unwrap(), OptOutcome::Optimal(4));
    }

    #[test]
    fn guards() {
        assert!(matches!(exhaustive_opt(&single_edge(7), 8), Err(LowerBoundError::OptGuard(_))));
        assert!(matches!(exhaustive_opt(&single_edge(2), 9), Err(LowerBoundError::OptGuard(_))));
        let lb = build_lowerbound(4, 2, BuildLimits::default()).unwrap();
        assert!(matches!(exhaustive_opt(&lb.instance, 8), Err(LowerBoundError::OptGuard(_))));
    }
}
