//! Greedy and random-delay baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::engine::EdgeQueues;
use crate::instance::MulticastInstance;
use crate::schedule::{Schedule, Send};

/// Forwards every tree's message down the tree, one send per edge per round.
/// `release(t)` is the first round tree `t` may use; `key(t, child)` orders
/// competing sends on an edge (smaller first).
fn forward_trees(
    instance: &MulticastInstance,
    release: impl Fn(usize) -> u32,
    key: impl Fn(usize, usize) -> (u32, u32),
) -> Schedule {
    let mut queues: EdgeQueues<(u32, u32), (u32, u32)> = EdgeQueues::new(instance.graph().edge_count());
    for (t, tree) in instance.trees().iter().enumerate() {
        let r = release(t);
        for &c in tree.children_local(0) {
            let c = c as usize;
            queues.push_at(r, instance.parent_edge(t, c), key(t, c), (t as u32, c as u32));
        }
    }
    let mut sends = Vec::new();
    queues.run(|round, _edge, (t, c), next| {
        let (t, c) = (t as usize, c as usize);
        let tree = instance.tree(t);
        let parent = tree.parent_local(c).expect("queued items are non-root");
        sends.push(Send { round, from: tree.node(parent), to: tree.node(c), message: tree.message() });
        for &g in tree.children_local(c) {
            let g = g as usize;
            next.push((instance.parent_edge(t, g), key(t, g), (t as u32, g as u32)));
        }
    });
    Schedule::new(sends)
}

/// Greedy schedule: every round each edge forwards one eligible message,
/// preferring the one with the deepest remaining subtree below the receiver
/// (smallest tree id on ties). Never longer than `C·D`.
pub fn greedy_schedule(instance: &MulticastInstance) -> Schedule {
    let heights: Vec<Vec<u32>> = instance.trees().iter().map(|t| t.heights()).collect();
    forward_trees(
        instance,
        |_| 1,
        |t, c| (u32::MAX - (heights[t][c] + 1), instance.tree(t).id().0),
    )
}

/// Start delays drawn uniformly from `[0, C)` per tree, then shifted so the
/// smallest is zero.
pub fn draw_start_delays(instance: &MulticastInstance, seed: u64) -> Vec<u32> {
    let c = instance.metrics().congestion.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delays: Vec<u32> = instance.trees().iter().map(|_| rng.gen_range(0..c)).collect();
    if let Some(&min) = delays.iter().min() {
        delays.iter_mut().for_each(|d| *d -= min);
    }
    delays
}

/// Random-delay baseline: each tree waits its start delay, then its message
/// moves greedily down the tree; competing sends are ordered by
/// `(delay + sender depth, tree id)`.
pub fn random_delay_schedule(instance: &MulticastInstance, seed: u64) -> Schedule {
    let delays = draw_start_delays(instance, seed);
    forward_trees(
        instance,
        |t| delays[t] + 1,
        |t, c| {
            let tree = instance.tree(t);
            let parent = tree.parent_local(c).expect("non-root");
            (delays[t] + tree.depth_local(parent), tree.id().0)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_random_instance;
    use crate::instance::{Graph, MulticastTree, NodeId, TreeId};
    use crate::schedule::simulate;

    fn congested_edge() -> MulticastInstance {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let trees = (0..2)
            .map(|i| MulticastTree::path(TreeId(i), &[NodeId(0), NodeId(1)]).unwrap())
            .collect();
        MulticastInstance::new(g, trees).unwrap()
    }

    fn single_path(len: u32) -> MulticastInstance {
        let g = Graph::new(len + 1, (0..len).map(|i| (i, i + 1))).unwrap();
        let nodes: Vec<NodeId> = (0..=len).map(NodeId).collect();
        MulticastInstance::new(g, vec![MulticastTree::path(TreeId(0), &nodes).unwrap()]).unwrap()
    }

    #[test]
    fn greedy_on_congested_edge() {
        let inst = congested_edge();
        let s = greedy_schedule(&inst);
        let r = simulate(&inst, &s);
        assert!(r.valid);
        assert_eq!(r.length, Some(2));
    }

    #[test]
    fn greedy_single_path() {
        let inst = single_path(5);
        assert_eq!(simulate(&inst, &greedy_schedule(&inst)).length, Some(5));
    }

    #[test]
    fn greedy_random_instances_within_cd() {
        for seed in 0..200 {
            let inst = gen_random_instance(40, 1 + (seed % 9) as u32, 1 + (seed % 6) as u32, seed).unwrap();
            let m = inst.metrics();
            let r = simulate(&inst, &greedy_schedule(&inst));
            assert!(r.valid, "seed {seed}: {:?}", r.violations.first());
            let len = r.length.unwrap();
            assert!(len <= m.congestion * m.dilation, "seed {seed}: {len} > C·D");
            assert!(len >= m.congestion.max(m.dilation));
        }
    }

    #[test]
    fn random_delay_no_contention_is_depth() {
        let inst = single_path(7);
        for seed in 0..5 {
            assert_eq!(simulate(&inst, &random_delay_schedule(&inst, seed)).length, Some(7));
        }
    }

    #[test]
    fn random_delay_congested_edge_any_seed() {
        let inst = congested_edge();
        for seed in 0..50 {
            let r = simulate(&inst, &random_delay_schedule(&inst, seed));
            assert!(r.valid);
            assert_eq!(r.length, Some(2), "seed {seed}");
        }
    }

    #[test]
    fn random_delay_deterministic_and_valid() {
        for seed in 0..50 {
            let inst = gen_random_instance(50, 6, 4, seed).unwrap();
            let a = random_delay_schedule(&inst, seed);
            assert_eq!(a, random_delay_schedule(&inst, seed));
            assert!(simulate(&inst, &a).valid);
        }
    }
}
