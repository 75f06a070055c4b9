//! Distributed rank-based short path decomposition.
//!
//! Phase 1, bottom-up: tree `T` gets an offset `X_T` in `[0, C)`. A node
//! sends its rank to its parent in frame `X_T + h`, where `h` is its height,
//! right after hearing from all its children; the one neighbor that stayed
//! silent is its parent. Messages sharing an edge and frame are concatenated
//! in tree-id order. Each carries a mode bit, the rank, and either the
//! tree's index among the edge's trees or the sender's height: the height
//! identifies the tree through `X_T = frame - h` when every tree of the edge
//! with that offset is sent together, which is only attempted when `C > D`.
//!
//! Phase 2: one bit per (edge, tree) tells each child whether it is its
//! parent's preferred child.
//!
//! Phase 3, top-down in reverse frame order: a parent tells each child its
//! position along its preferred chain modulo `L1 = ⌈⌈log2 n⌉^(1+ε)⌉` and
//! optionally its chunk level. A chunk starts wherever the position is `1`.

use std::sync::Arc;

use bitvec::prelude::*;
use serde::Serialize;

use super::bits::{push_uint, read_uint};
use super::framed::{run_frames, FrameStats, Framed, FramedProgram, Links};
use super::local::{edge_memberships, memberships, shared_offset, Membership, PURPOSE_CONVERGECAST};
use super::runner::{CongestNetwork, CongestRunner, CongestTranscript};
use super::{CongestError, CongestOptions};
use crate::decomposition::{rank_from_children, DecompositionKind, PathDecomposition};
use crate::instance::{MulticastInstance, NodeId};
use crate::math;

const NONE: u32 = u32::MAX;

#[derive(Debug)]
struct Params {
    congestion: u32,
    /// Largest phase-1 frame index, `(C - 1) + (D - 1)`.
    last_frame: u32,
    chunk_len: u32,
    rank_bits: u32,
    height_bits: u32,
    pos_bits: u32,
    level_bits: u32,
    carry_level: bool,
    height_mode: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct TreeState {
    pub m: Membership,
    pub x: u32,
    /// Per tree neighbor: rank and height reported by that child.
    pub heard: Vec<Option<(u32, u32)>>,
    heard_count: usize,
    sent: bool,
    pub parent: Option<NodeId>,
    pub rank: Option<u32>,
    pub height: u32,
    pub preferred: Option<NodeId>,
    pub is_preferred: bool,
    /// Position modulo `L1` of the edge into this node; 0 at the root.
    pub pos: u32,
    /// Chunk level of the edge into this node; 0 at the root.
    pub level: u32,
    pub got_pos: bool,
    /// Chunk level assigned to each child edge, by tree-neighbor index.
    pub child_level: Vec<u32>,
}

impl TreeState {
    fn complete(&self) -> bool {
        let deg = self.m.neighbors.len();
        if self.m.root {
            self.heard_count == deg
        } else {
            self.heard_count + 1 == deg
        }
    }

    fn finish_ranks(&mut self) {
        let children = self.heard.iter().zip(&self.m.neighbors).filter_map(|(h, &v)| h.map(|(r, _)| (r, v)));
        self.rank = Some(rank_from_children(children.clone().map(|(r, _)| r)));
        self.preferred = children.max_by_key(|&(r, v)| (r, std::cmp::Reverse(v))).map(|(_, v)| v);
    }

    pub fn children(&self) -> impl Iterator<Item = (usize, NodeId)> + '_ {
        self.m.neighbors.iter().copied().enumerate().filter(move |&(_, v)| Some(v) != self.parent)
    }

    /// Whether the edge into this node starts a chunk.
    pub fn starts_chunk(&self, chunk_len: u32) -> bool {
        !self.is_preferred || chunk_len == 1 || self.pos == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Ranks,
    Preferred,
    Chunks,
}

pub(crate) struct DecompNode {
    links: Links,
    pub trees: Vec<TreeState>,
    /// Per link, indices into `trees` of the trees using that edge.
    on_edge: Vec<Vec<usize>>,
    phase: Phase,
    params: Arc<Params>,
}

impl DecompNode {
    fn index_bits(&self, link: usize) -> u32 {
        math::bits_for(self.on_edge[link].len() as u64 - 1)
    }

    fn begin_ranks(&mut self, f: u32) {
        let mut per_link: Vec<Vec<(usize, u32, u32)>> = vec![Vec::new(); self.links.len()];
        for (s, t) in self.trees.iter_mut().enumerate() {
            if t.m.root || t.sent || !t.complete() {
                continue;
            }
            let is_leaf = t.m.neighbors.len() == 1;
            if is_leaf && f != t.x {
                continue;
            }
            let parent = t.m.neighbors.iter().zip(&t.heard).find(|(_, h)| h.is_none()).map(|(&v, _)| v);
            t.parent = parent;
            t.height = f - t.x;
            t.finish_ranks();
            t.sent = true;
            let link = self.links.index_of(parent.expect("one silent neighbor"));
            per_link[link].push((s, t.rank.expect("just computed"), t.height));
        }
        let p = Arc::clone(&self.params);
        for (link, msgs) in per_link.into_iter().enumerate() {
            if msgs.is_empty() {
                continue;
            }
            let idx_bits = self.index_bits(link);
            let edge = &self.on_edge[link];
            // Heights whose every candidate tree is in this batch.
            let full_height = |h: u32| {
                let candidates = edge.iter().filter(|&&s| f >= h && self.trees[s].x == f - h).count();
                let sending = msgs.iter().filter(|m| m.2 == h).count();
                candidates == sending
            };
            let mut bits: BitVec = BitVec::new();
            for &(s, rank, h) in &msgs {
                let by_height = p.height_mode && p.height_bits < idx_bits && full_height(h);
                bits.push(by_height);
                push_uint(&mut bits, u64::from(rank), p.rank_bits);
                if by_height {
                    push_uint(&mut bits, u64::from(h), p.height_bits);
                } else {
                    let idx = edge.iter().position(|&e| e == s).expect("tree uses the edge");
                    push_uint(&mut bits, idx as u64, idx_bits);
                }
            }
            self.links.queue(link).extend_from_bitslice(&bits);
        }
    }

    fn end_ranks(&mut self, f: u32) {
        let p = Arc::clone(&self.params);
        for link in 0..self.links.len() {
            let inbox = self.links.take_inbox(link);
            if inbox.is_empty() {
                continue;
            }
            let from = self.links.neighbor(link);
            let idx_bits = self.index_bits(link);
            let mut seen_at_height: Vec<(u32, usize)> = Vec::new();
            let mut pos = 0;
            while pos < inbox.len() {
                let by_height = inbox[pos];
                pos += 1;
                let rank = read_uint(&inbox, &mut pos, p.rank_bits) as u32;
                let s = if by_height {
                    let h = read_uint(&inbox, &mut pos, p.height_bits) as u32;
                    let k = match seen_at_height.iter_mut().find(|(hh, _)| *hh == h) {
                        Some((_, k)) => {
                            *k += 1;
                            *k
                        }
                        None => {
                            seen_at_height.push((h, 0));
                            0
                        }
                    };
                    *self.on_edge[link]
                        .iter()
                        .filter(|&&s| f >= h && self.trees[s].x == f - h)
                        .nth(k)
                        .expect("sender only uses heights that identify trees")
                } else {
                    self.on_edge[link][read_uint(&inbox, &mut pos, idx_bits) as usize]
                };
                let t = &mut self.trees[s];
                let i = t.m.neighbors.binary_search(&from).expect("tree neighbor");
                t.heard[i] = Some((rank, f - t.x));
                t.heard_count += 1;
            }
        }
        for t in &mut self.trees {
            if t.m.root && t.rank.is_none() && t.complete() {
                t.finish_ranks();
            }
        }
    }

    fn begin_preferred(&mut self) {
        for link in 0..self.links.len() {
            let v = self.links.neighbor(link);
            let mut bits: BitVec = BitVec::new();
            for &s in &self.on_edge[link] {
                let t = &self.trees[s];
                if t.parent != Some(v) {
                    bits.push(t.preferred == Some(v));
                }
            }
            self.links.queue(link).extend_from_bitslice(&bits);
        }
    }

    fn end_preferred(&mut self) {
        for link in 0..self.links.len() {
            let v = self.links.neighbor(link);
            let inbox = self.links.take_inbox(link);
            let mut pos = 0;
            for &s in &self.on_edge[link] {
                if self.trees[s].parent == Some(v) {
                    self.trees[s].is_preferred = inbox[pos];
                    pos += 1;
                }
            }
            debug_assert_eq!(pos, inbox.len());
        }
    }

    fn begin_chunks(&mut self, g: u32) {
        let p = Arc::clone(&self.params);
        let l1 = p.chunk_len;
        let mut per_link: Vec<Vec<(usize, u32, u32)>> = vec![Vec::new(); self.links.len()];
        for (s, t) in self.trees.iter_mut().enumerate() {
            if !t.got_pos {
                continue;
            }
            let targets: Vec<(usize, NodeId)> = t
                .children()
                .filter(|&(i, _)| {
                    let h = t.heard[i].expect("children reported").1;
                    p.last_frame - (t.x + h) == g
                })
                .collect();
            for (i, u) in targets {
                let preferred = t.preferred == Some(u);
                let new_chunk = !preferred || t.pos % l1 == 0;
                let pos = if preferred { (t.pos + 1) % l1 } else { 1 % l1 };
                let level = t.level + u32::from(new_chunk);
                t.child_level[i] = level;
                per_link[self.links.index_of(u)].push((s, pos, level));
            }
        }
        for (link, mut msgs) in per_link.into_iter().enumerate() {
            msgs.sort_unstable_by_key(|m| m.0);
            let q = self.links.queue(link);
            for (_, pos, level) in msgs {
                push_uint(q, u64::from(pos), p.pos_bits);
                if p.carry_level {
                    push_uint(q, u64::from(level), p.level_bits);
                }
            }
        }
    }

    fn end_chunks(&mut self, g: u32) {
        let p = Arc::clone(&self.params);
        for link in 0..self.links.len() {
            let v = self.links.neighbor(link);
            let inbox = self.links.take_inbox(link);
            if inbox.is_empty() {
                continue;
            }
            let mut pos = 0;
            for &s in &self.on_edge[link] {
                let t = &mut self.trees[s];
                if t.parent != Some(v) || p.last_frame - (t.x + t.height) != g {
                    continue;
                }
                t.pos = read_uint(&inbox, &mut pos, p.pos_bits) as u32;
                if p.carry_level {
                    t.level = read_uint(&inbox, &mut pos, p.level_bits) as u32;
                }
                t.got_pos = true;
            }
            debug_assert_eq!(pos, inbox.len());
        }
    }
}

impl FramedProgram for DecompNode {
    fn links(&mut self) -> &mut Links {
        &mut self.links
    }

    fn links_ref(&self) -> &Links {
        &self.links
    }

    fn begin_frame(&mut self, frame: u32) {
        match self.phase {
            Phase::Ranks => self.begin_ranks(frame),
            Phase::Preferred => self.begin_preferred(),
            Phase::Chunks => self.begin_chunks(frame),
        }
    }

    fn end_frame(&mut self, frame: u32) {
        match self.phase {
            Phase::Ranks => self.end_ranks(frame),
            Phase::Preferred => self.end_preferred(),
            Phase::Chunks => self.end_chunks(frame),
        }
    }
}

/// Rounds spent in each phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhaseRounds {
    pub ranks: u32,
    pub preferred: u32,
    pub chunks: u32,
    pub total: u32,
    /// Frames that needed more than the fixed frame length.
    pub overflows: u32,
}

/// Output of [`distributed_rank_decomposition`].
#[derive(Clone, Debug)]
pub struct DistributedDecomposition {
    /// One decomposition per tree, in instance order.
    pub decompositions: Vec<PathDecomposition>,
    /// Rank each node computed, per tree and local index.
    pub ranks: Vec<Vec<u32>>,
    /// Rank as decoded by the parent, per tree and local index of the child.
    pub received_ranks: Vec<Vec<Option<u32>>>,
    pub chunk_len: u32,
    pub rounds: PhaseRounds,
    pub transcript: CongestTranscript,
}

/// `L1 = ⌈⌈log2 n⌉^(1+ε)⌉`.
pub fn decomposition_chunk_len(node_count: u32, epsilon: f64) -> u32 {
    math::log_power(u64::from(node_count), 1.0 + epsilon)
}

/// Expected round-count shape of the decomposition, `(C + D)·(1 + log2 min(C, D) / log2 log2 n)`.
pub fn decomposition_round_shape(congestion: u32, dilation: u32, node_count: u32) -> f64 {
    let m = f64::from(congestion.min(dilation).max(1));
    let loglog = f64::from(math::log_n(u64::from(node_count))).log2().max(1.0);
    f64::from(congestion + dilation) * (1.0 + m.log2() / loglog)
}

pub(crate) fn build_nodes(
    instance: &MulticastInstance,
    options: &CongestOptions,
    carry_level: bool,
    budget: u32,
) -> Vec<Framed<DecompNode>> {
    let n = instance.node_count();
    let metrics = instance.metrics();
    let (c, d) = (metrics.congestion.max(1), metrics.dilation.max(1));
    let chunk_len = decomposition_chunk_len(n, options.epsilon);
    let params = Arc::new(Params {
        congestion: c,

        last_frame: (c - 1) + (d - 1),
        chunk_len,
        rank_bits: math::bits_for(u64::from(math::floor_log2(u64::from(n)))),
        height_bits: math::bits_for(u64::from(d)),
        pos_bits: math::bits_for(u64::from(chunk_len - 1)),
        level_bits: math::bits_for(u64::from(d)),
        carry_level,
        height_mode: c > d,
    });
    memberships(instance, false)
        .into_iter()
        .map(|list| {
            let (neighbors, on_edge) = edge_memberships(&list);
            let trees = list
                .into_iter()
                .map(|m| {
                    let k = m.neighbors.len();
                    TreeState {
                        x: shared_offset(options.seed, PURPOSE_CONVERGECAST, m.tree, params.congestion),
                        heard: vec![None; k],
                        heard_count: 0,
                        sent: false,
                        parent: None,
                        rank: None,
                        height: 0,
                        preferred: None,
                        is_preferred: false,
                        pos: 0,
                        level: 0,
                        got_pos: m.root,
                        child_level: vec![NONE; k],
                        m,
                    }
                })
                .collect();
            Framed(DecompNode { links: Links::new(neighbors, budget), trees, on_edge, phase: Phase::Ranks, params: Arc::clone(&params) })
        })
        .collect()
}

/// Runs the three phases on `runner`, whose programs are fresh decomposition
/// nodes. Returns per-phase rounds.
pub(crate) fn run_phases(
    runner: &mut CongestRunner<'_, Framed<DecompNode>>,
    options: &CongestOptions,
    max_rounds: u32,
) -> Result<PhaseRounds, CongestError> {
    let params = Arc::clone(&runner.programs()[0].0.params);
    let frames = params.last_frame + 1;
    let fixed = options.fixed_frame_len;
    let mut rounds = PhaseRounds::default();
    let add = |stats: FrameStats, slot: &mut u32, overflows: &mut u32| {
        *slot = stats.rounds;
        *overflows += stats.overflows;
    };
    let s1 = run_frames(runner, frames, fixed, max_rounds).map_err(CongestError::in_phase("rank convergecast"))?;
    add(s1, &mut rounds.ranks, &mut rounds.overflows);
    runner.programs_mut().iter_mut().for_each(|p| p.0.phase = Phase::Preferred);
    let s2 = run_frames(runner, 1, None, max_rounds).map_err(CongestError::in_phase("preferred edges"))?;
    add(s2, &mut rounds.preferred, &mut rounds.overflows);
    runner.programs_mut().iter_mut().for_each(|p| p.0.phase = Phase::Chunks);
    let s3 = run_frames(runner, frames, fixed, max_rounds).map_err(CongestError::in_phase("chunk positions"))?;
    add(s3, &mut rounds.chunks, &mut rounds.overflows);
    rounds.total = rounds.ranks + rounds.preferred + rounds.chunks;
    Ok(rounds)
}

/// Default round limit: 64 times the bound shape plus slack.
pub(crate) fn round_limit(instance: &MulticastInstance) -> u32 {
    let m = instance.metrics();
    let shape = decomposition_round_shape(m.congestion, m.dilation, instance.node_count());
    (64.0 * shape) as u32 + 64 * math::log_n(u64::from(instance.node_count())) + 64
}

/// Per-tree results gathered from the nodes.
pub(crate) struct Assembled {
    pub decompositions: Vec<PathDecomposition>,
    pub ranks: Vec<Vec<u32>>,
    pub received_ranks: Vec<Vec<Option<u32>>>,
}

/// Collects the nodes' local results into per-tree decompositions.
pub(crate) fn assemble(
    instance: &MulticastInstance,
    nodes: &[Framed<DecompNode>],
    chunk_len: u32,
) -> Result<Assembled, CongestError> {
    let trees = instance.trees();
    let mut state: Vec<Vec<Option<&TreeState>>> = trees.iter().map(|t| vec![None; t.len()]).collect();
    for (v, node) in nodes.iter().enumerate() {
        for t in &node.0.trees {
            let ti = instance.tree_index(t.m.tree).expect("known tree");
            let l = trees[ti].local_index(NodeId(v as u32)).expect("member");
            state[ti][l] = Some(t);
        }
    }
    let mut decompositions = Vec::with_capacity(trees.len());
    let mut ranks = Vec::with_capacity(trees.len());
    let mut received = Vec::with_capacity(trees.len());
    for (ti, tree) in trees.iter().enumerate() {
        let st = &state[ti];
        let mut paths = Vec::new();
        let mut r = vec![0u32; tree.len()];
        let mut rr = vec![None; tree.len()];
        if tree.len() > 1 {
            for l in 0..tree.len() {
                let s = st[l].ok_or(CongestError::Incomplete { tree: tree.id(), node: tree.node(l) })?;
                r[l] = s.rank.ok_or(CongestError::Incomplete { tree: tree.id(), node: tree.node(l) })?;
                for (i, u) in s.children() {
                    let lu = tree.local_index(u).expect("member");
                    rr[lu] = s.heard[i].map(|(rank, _)| rank);
                }
                if l == 0 || !s.starts_chunk(chunk_len) {
                    continue;
                }
                let mut path = vec![s.parent.expect("non-root"), tree.node(l)];
                let mut cur = s;
                while let Some(w) = cur.preferred {
                    let next = st[tree.local_index(w).expect("member")].expect("member state");
                    if next.starts_chunk(chunk_len) {
                        break;
                    }
                    path.push(w);
                    cur = next;
                }
                paths.push(path);
            }
        }
        let d = PathDecomposition::from_paths(tree, DecompositionKind::ShortRefined, paths)
            .map_err(|e| CongestError::Assembly { tree: tree.id(), reason: e.to_string() })?;
        decompositions.push(d);
        ranks.push(r);
        received.push(rr);
    }
    Ok(Assembled { decompositions, ranks, received_ranks: received })
}

/// Runs the distributed decomposition and gathers its output.
pub fn distributed_rank_decomposition(
    instance: &MulticastInstance,
    options: &CongestOptions,
) -> Result<DistributedDecomposition, CongestError> {
    let network = CongestNetwork::new(instance.graph(), options.bit_factor);
    let nodes = build_nodes(instance, options, false, network.budget());
    let chunk_len = nodes.first().map_or(1, |n| n.0.params.chunk_len);
    let mut runner = CongestRunner::new(network, nodes, options.record);
    let max_rounds = options.max_rounds.unwrap_or_else(|| round_limit(instance));
    let rounds = run_phases(&mut runner, options, max_rounds)?;
    let (nodes, transcript) = runner.into_parts();
    let Assembled { decompositions, ranks, received_ranks } = assemble(instance, &nodes, chunk_len)?;
    Ok(DistributedDecomposition { decompositions, ranks, received_ranks, chunk_len, rounds, transcript })
}
