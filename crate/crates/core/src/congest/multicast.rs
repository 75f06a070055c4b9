//! Distributed multicast in time frames.
//!
//! Tree `T` is delayed by `X_T` uniform in `[0, ⌈C/L⌉)` frames, with
//! `L = ⌈⌈log2 n⌉^(2+ε)⌉`. An edge of `T` whose parent endpoint lies at depth
//! `d` becomes eligible in frame `X_T + ⌊d/L⌋`. Each round every edge
//! forwards one held, eligible message, smallest `(frame, tree id)` first; an
//! edge used in both directions alternates, the smaller endpoint sending in
//! odd rounds. A frame ends once every edge eligible so far has been used.
//!
//! Nodes that know their depths learn which neighbor is their parent from
//! one exchange of depths modulo 3. Otherwise the distributed rank
//! decomposition runs first and levels of `λ = max(1, ⌊L/L1⌋)` chunks take
//! the place of depth ranges.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use bitvec::prelude::*;

use super::bits::{push_uint, read_uint};
use super::framed::{run_frames, Framed, FramedProgram, Links};
use super::local::{edge_memberships, memberships, shared_offset, Membership, PURPOSE_MULTICAST};
use super::rank_decomp::{self, DistributedDecomposition};
use super::runner::{CongestNetwork, CongestRunner, CongestTranscript, NodeProgram};
use super::{CongestError, CongestOptions};
use crate::instance::{EdgeId, MulticastInstance, NodeId, TreeId};
use crate::math;
use crate::schedule::{Schedule, Send};

/// `L = ⌈⌈log2 n⌉^(2+ε)⌉`.
pub fn multicast_range_len(node_count: u32, epsilon: f64) -> u32 {
    math::log_power(u64::from(node_count), 2.0 + epsilon)
}

/// Output of [`distributed_multicast`].
#[derive(Clone, Debug)]
pub struct DistributedMulticast {
    /// Sends of the multicast itself, rounds numbered from 1.
    pub schedule: Schedule,
    pub range_len: u32,
    /// `X_T` per tree, in instance order.
    pub offsets: Vec<u32>,
    pub frames: u32,
    /// Largest number of sends over one edge within one frame.
    pub max_frame_congestion: u32,
    /// Orientation exchange or decomposition.
    pub preprocessing_rounds: u32,
    pub multicast_rounds: u32,
    pub rounds: u32,
    pub decomposition: Option<DistributedDecomposition>,
    pub transcript: CongestTranscript,
}

/// Parent discovery from depths modulo 3.
struct Orient {
    links: Links,
    trees: Vec<Membership>,
    on_edge: Vec<Vec<usize>>,
    parents: Vec<Option<NodeId>>,
}

impl FramedProgram for Orient {
    fn links(&mut self) -> &mut Links {
        &mut self.links
    }

    fn links_ref(&self) -> &Links {
        &self.links
    }

    fn begin_frame(&mut self, _frame: u32) {
        for link in 0..self.links.len() {
            let mut bits: BitVec = BitVec::new();
            for &s in &self.on_edge[link] {
                push_uint(&mut bits, u64::from(self.trees[s].depth.expect("depths known") % 3), 2);
            }
            self.links.queue(link).extend_from_bitslice(&bits);
        }
    }

    fn end_frame(&mut self, _frame: u32) {
        for link in 0..self.links.len() {
            let v = self.links.neighbor(link);
            let inbox = self.links.take_inbox(link);
            let mut pos = 0;
            for &s in &self.on_edge[link] {
                let theirs = read_uint(&inbox, &mut pos, 2) as u32;
                let mine = self.trees[s].depth.expect("depths known");
                if mine > 0 && theirs == (mine + 2) % 3 {
                    self.parents[s] = Some(v);
                }
            }
        }
    }
}

/// A node's sorted tree neighbors, the trees on each of those edges, and its
/// forwarding view of every tree.
type NodeView = (Vec<NodeId>, Vec<Vec<usize>>, Vec<Local>);

/// One tree as seen by the forwarding node.
#[derive(Clone, Debug)]
struct Local {
    tree: TreeId,
    message: TreeId,
    parent: Option<NodeId>,
    /// `(child, eligible frame)`.
    children: Vec<(NodeId, u32)>,
}

struct MTree {
    tree: TreeId,
    message: TreeId,
    holds: bool,
    /// `(link, eligible frame)`.
    children: Vec<(u32, u32)>,
}

struct Forwarder {
    me: NodeId,
    neighbors: Vec<NodeId>,
    on_edge: Vec<Vec<usize>>,
    index_bits: Vec<u32>,
    alternate: Vec<bool>,
    trees: Vec<MTree>,
    ready: Vec<BinaryHeap<Reverse<(u32, TreeId, u32)>>>,
    due_frames: Vec<u32>,
    due_next: usize,
    due: u64,
    remaining: u64,
    frame: u32,
    base: u32,
    /// `(round, frame, to, message)`.
    log: Vec<(u32, u32, NodeId, TreeId)>,
}

impl Forwarder {
    fn new(me: NodeId, neighbors: Vec<NodeId>, on_edge: Vec<Vec<usize>>, locals: Vec<Local>) -> Forwarder {
        let link = |v: NodeId| neighbors.binary_search(&v).expect("tree neighbor") as u32;
        let mut alternate = vec![(false, false); neighbors.len()];
        let mut due_frames = Vec::new();
        let trees: Vec<MTree> = locals
            .into_iter()
            .map(|l| {
                if let Some(p) = l.parent {
                    alternate[link(p) as usize].0 = true;
                }
                let children = l
                    .children
                    .iter()
                    .map(|&(c, f)| {
                        alternate[link(c) as usize].1 = true;
                        due_frames.push(f);
                        (link(c), f)
                    })
                    .collect();
                MTree { tree: l.tree, message: l.message, holds: l.parent.is_none(), children }
            })
            .collect();
        due_frames.sort_unstable();
        let index_bits = on_edge.iter().map(|e| math::bits_for(e.len() as u64 - 1)).collect();
        let mut f = Forwarder {
            me,
            ready: vec![BinaryHeap::new(); neighbors.len()],
            neighbors,
            on_edge,
            index_bits,
            alternate: alternate.into_iter().map(|(a, b)| a && b).collect(),
            remaining: due_frames.len() as u64,
            due_frames,
            due_next: 0,
            due: 0,
            trees,
            frame: 0,
            base: 0,
            log: Vec::new(),
        };
        for s in 0..f.trees.len() {
            if f.trees[s].holds {
                f.release(s);
            }
        }
        f
    }

    fn release(&mut self, s: usize) {
        let t = &self.trees[s];
        for &(link, frame) in &t.children {
            self.ready[link as usize].push(Reverse((frame, t.tree, s as u32)));
        }
    }

    fn set_frame(&mut self, frame: u32) {
        self.frame = frame;
        while self.due_next < self.due_frames.len() && self.due_frames[self.due_next] <= frame {
            self.due += 1;
            self.due_next += 1;
        }
    }
}

impl NodeProgram for Forwarder {
    fn send(&mut self, round: u32, out: &mut Vec<(NodeId, BitVec)>) {
        let r = round - self.base;
        for link in 0..self.neighbors.len() {
            let v = self.neighbors[link];
            if self.alternate[link] && (r % 2 == 1) != (self.me < v) {
                continue;
            }
            let heap = &mut self.ready[link];
            if heap.peek().is_some_and(|Reverse((f, _, _))| *f <= self.frame) {
                let Reverse((_, _, s)) = heap.pop().expect("peeked");
                let idx = self.on_edge[link].binary_search(&(s as usize)).expect("tree on edge");
                let mut bits: BitVec = BitVec::new();
                push_uint(&mut bits, idx as u64, self.index_bits[link]);
                out.push((v, bits));
                self.due -= 1;
                self.remaining -= 1;
                self.log.push((r, self.frame, v, self.trees[s as usize].message));
            }
        }
    }

    fn receive(&mut self, _round: u32, from: NodeId, payload: &BitSlice) {
        let link = self.neighbors.binary_search(&from).expect("neighbor");
        let mut pos = 0;
        let idx = read_uint(payload, &mut pos, self.index_bits[link]) as usize;
        let s = self.on_edge[link][idx];
        if !self.trees[s].holds {
            self.trees[s].holds = true;
            self.release(s);
        }
    }

    fn done(&self) -> bool {
        self.remaining == 0
    }
}

fn message_of(instance: &MulticastInstance, tree: TreeId) -> TreeId {
    instance.tree(instance.tree_index(tree).expect("known tree")).message()
}

/// Runs the multicast. With `depths_known`, nodes start out knowing their
/// depth in each tree.
pub fn distributed_multicast(
    instance: &MulticastInstance,
    options: &CongestOptions,
    depths_known: bool,
) -> Result<DistributedMulticast, CongestError> {
    let n = instance.node_count();
    let metrics = instance.metrics();
    let range_len = multicast_range_len(n, options.epsilon);
    let frame_range = math::div_ceil(u64::from(metrics.congestion.max(1)), u64::from(range_len)) as u32;
    let offsets: Vec<u32> =
        instance.trees().iter().map(|t| shared_offset(options.seed, PURPOSE_MULTICAST, t.id(), frame_range)).collect();
    let offset_of = |tree: TreeId| offsets[instance.tree_index(tree).expect("known tree")];
    let network = CongestNetwork::new(instance.graph(), options.bit_factor);
    let limit = options.max_rounds.unwrap_or_else(|| {
        64 * (metrics.congestion + metrics.dilation + range_len) + rank_decomp::round_limit(instance) + 64
    });

    // Per node: tree neighbors, trees per edge, and the local forwarding view.
    let mut views: Vec<NodeView> = Vec::with_capacity(n as usize);
    let mut decomposition = None;
    let transcript;
    if depths_known {
        let nodes: Vec<Framed<Orient>> = memberships(instance, true)
            .into_iter()
            .map(|trees| {
                let (neighbors, on_edge) = edge_memberships(&trees);
                let parents = vec![None; trees.len()];
                Framed(Orient { links: Links::new(neighbors, network.budget()), trees, on_edge, parents })
            })
            .collect();
        let mut runner = CongestRunner::new(network, nodes, options.record);
        run_frames(&mut runner, 1, None, limit).map_err(CongestError::in_phase("orientation"))?;
        let (nodes, t) = runner.into_parts();
        transcript = t;
        for Framed(o) in nodes {
            let neighbors: Vec<NodeId> = (0..o.links.len()).map(|i| o.links.neighbor(i)).collect();
            let locals = o
                .trees
                .iter()
                .zip(&o.parents)
                .map(|(m, &parent)| {
                    let d = m.depth.expect("depths known");
                    let eligible = offset_of(m.tree) + d / range_len;
                    Local {
                        tree: m.tree,
                        message: message_of(instance, m.tree),
                        parent,
                        children: m.neighbors.iter().filter(|&&v| Some(v) != parent).map(|&v| (v, eligible)).collect(),
                    }
                })
                .collect();
            views.push((neighbors, o.on_edge, locals));
        }
    } else {
        let nodes = rank_decomp::build_nodes(instance, options, true, network.budget());
        let chunk_len = rank_decomp::decomposition_chunk_len(n, options.epsilon);
        let lambda = (range_len / chunk_len).max(1);
        let mut runner = CongestRunner::new(network, nodes, options.record);
        let rounds = rank_decomp::run_phases(&mut runner, options, limit)?;
        let (nodes, t) = runner.into_parts();
        let rank_decomp::Assembled { decompositions, ranks, received_ranks } =
            rank_decomp::assemble(instance, &nodes, chunk_len)?;
        for (Framed(node), list) in nodes.iter().zip(memberships(instance, false)) {
            let (neighbors, on_edge) = edge_memberships(&list);
            let locals = node
                .trees
                .iter()
                .map(|t| Local {
                    tree: t.m.tree,
                    message: message_of(instance, t.m.tree),
                    parent: t.parent,
                    children: t
                        .children()
                        .map(|(i, v)| (v, offset_of(t.m.tree) + (t.child_level[i] - 1) / lambda))
                        .collect(),
                })
                .collect();
            views.push((neighbors, on_edge, locals));
        }
        decomposition = Some(DistributedDecomposition {
            decompositions,
            ranks,
            received_ranks,
            chunk_len,
            rounds,
            transcript: CongestTranscript::new(t.budget, false),
        });
        transcript = t;
    }
    let preprocessing_rounds = transcript.rounds;

    let forwarders: Vec<Forwarder> = views
        .into_iter()
        .enumerate()
        .map(|(v, (neighbors, on_edge, locals))| Forwarder::new(NodeId(v as u32), neighbors, on_edge, locals))
        .collect();
    let mut runner = CongestRunner::with_transcript(network, forwarders, transcript);
    runner.programs_mut().iter_mut().for_each(|p| p.base = preprocessing_rounds);
    let mut frame = 0u32;
    while !runner.all_done() {
        runner.programs_mut().iter_mut().for_each(|p| p.set_frame(frame));
        let mut used = 0u32;
        loop {
            let due: u64 = runner.programs().iter().map(|p| p.due).sum();
            if (due == 0 && used > 0) || runner.all_done() {
                break;
            }
            if runner.round() >= limit {
                return Err(CongestError::in_phase("multicast")(CongestError::NoTermination { max_rounds: limit }));
            }
            runner.step().map_err(CongestError::in_phase("multicast"))?;
            used += 1;
        }
        frame += 1;
    }
    let (forwarders, transcript) = runner.into_parts();
    let multicast_rounds = transcript.rounds - preprocessing_rounds;

    let graph = instance.graph();
    let mut per_frame_edge: HashMap<(u32, EdgeId), u32> = HashMap::new();
    let mut sends = Vec::new();
    for f in &forwarders {
        for &(round, fr, to, message) in &f.log {
            let e = graph.edge_id(f.me, to).expect("forwarded over a graph edge");
            *per_frame_edge.entry((fr, e)).or_default() += 1;
            sends.push(Send { round, from: f.me, to, message });
        }
    }
    Ok(DistributedMulticast {
        schedule: Schedule::with_declared_length(sends, multicast_rounds),
        range_len,
        offsets,
        frames: frame,
        max_frame_congestion: per_frame_edge.values().copied().max().unwrap_or(0),
        preprocessing_rounds,
        multicast_rounds,
        rounds: transcript.rounds,
        decomposition,
        transcript,
    })
}
