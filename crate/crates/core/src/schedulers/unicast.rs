//! Simultaneous unicast inside one frame: random per-path delays used as a
//! priority timetable, with every edge forwarding whenever it has work.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::EdgeQueues;
use super::SchedulerError;
use crate::instance::{EdgeId, Graph, NodeId, TreeId};
use crate::schedule::{Schedule, Send};

/// One packet's route: `nodes[0]` already holds `message`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnicastPath {
    pub message: TreeId,
    pub nodes: Vec<NodeId>,
}

/// A route with its edges already resolved.
pub(crate) struct Route<'a> {
    pub message: TreeId,
    pub nodes: &'a [NodeId],
    pub edges: Vec<EdgeId>,
}

/// Routes every packet along its path. Each packet draws a delay `δ` uniform
/// in `[0, C')`; on a contended edge the packet with the smallest
/// `δ + hop` goes first, then the one with more hops left. Edges never idle
/// while a packet waits, so the result is at most `C'·D'` rounds long.
/// Rounds are numbered from 1.
pub(crate) fn route_packets(routes: &[Route<'_>], rng: &mut impl Rng) -> (Vec<Send>, u32) {
    // Compact the edges this fragment touches.
    let mut local: HashMap<EdgeId, u32> = HashMap::new();
    let mut load: Vec<u32> = Vec::new();
    let local_edges: Vec<Vec<u32>> = routes
        .iter()
        .map(|r| {
            r.edges
                .iter()
                .map(|e| {
                    let next = local.len() as u32;
                    let id = *local.entry(*e).or_insert(next);
                    if id as usize == load.len() {
                        load.push(0);
                    }
                    load[id as usize] += 1;
                    id
                })
                .collect()
        })
        .collect();
    let congestion = load.iter().copied().max().unwrap_or(0).max(1);
    let delays: Vec<u32> = routes.iter().map(|_| rng.gen_range(0..congestion)).collect();

    let key = |p: usize, hop: usize| {
        let remaining = (routes[p].edges.len() - hop) as u32;
        (delays[p] + hop as u32, u32::MAX - remaining)
    };
    let mut queues: EdgeQueues<(u32, u32), (u32, u32)> = EdgeQueues::new(load.len());
    for (p, edges) in local_edges.iter().enumerate() {
        if let Some(&e) = edges.first() {
            queues.push(EdgeId(e), key(p, 0), (p as u32, 0));
        }
    }
    let mut sends = Vec::new();
    let length = queues.run(|round, _edge, (p, hop), next| {
        let (p, hop) = (p as usize, hop as usize);
        let r = &routes[p];
        sends.push(Send { round, from: r.nodes[hop], to: r.nodes[hop + 1], message: r.message });
        if hop + 1 < r.edges.len() {
            next.push((EdgeId(local_edges[p][hop + 1]), key(p, hop + 1), (p as u32, hop as u32 + 1)));
        }
    });
    (sends, length)
}

/// Schedules a set of unicast paths on `graph`, with delays drawn from
/// `seed`. Several paths may carry the same message as long as they do not
/// depend on each other.
pub fn unicast_frame_schedule(paths: &[UnicastPath], graph: &Graph, seed: u64) -> Result<Schedule, SchedulerError> {
    let mut routes = Vec::with_capacity(paths.len());
    for p in paths {
        let edges = p
            .nodes
            .windows(2)
            .map(|w| graph.edge_id(w[0], w[1]).ok_or(SchedulerError::NotAGraphEdge { from: w[0], to: w[1] }))
            .collect::<Result<Vec<_>, _>>()?;
        routes.push(Route { message: p.message, nodes: &p.nodes, edges });
    }
    let (sends, length) = route_packets(&routes, &mut super::frame_rng(seed, 0));
    Ok(Schedule::with_declared_length(sends, length))
}
