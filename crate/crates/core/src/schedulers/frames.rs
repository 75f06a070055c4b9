//! Frame-based multicast scheduler.
//!
//! Every tree is cut into short paths (heavy paths chopped into chunks of
//! `ℓ` edges). A chunk at level `j` of tree `T` belongs to frame
//! `j + X_T`, where the offset `X_T` is uniform in `[0, max(1, ⌈C/ℓ⌉))`.
//! Frames run one after another and each is routed as a simultaneous
//! unicast. A chunk's top node is covered by a chunk of lower level, so it
//! already holds the message when the chunk's frame starts.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::unicast::{route_packets, Route};
use super::{frame_rng, SchedulerError};
use crate::decomposition::{default_chunk_len, short_decomposition, PathDecomposition};
use crate::instance::{EdgeId, MulticastInstance};
use crate::math;
use crate::schedule::{Schedule, Send};

/// How long each frame lasts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FramePadding {
    /// Each frame ends as soon as its routing finishes.
    #[default]
    Dynamic,
    /// Every frame lasts exactly this many rounds; longer routings stretch
    /// their frame and are counted as overflows.
    Fixed(u32),
    /// Every frame lasts as long as the longest one.
    ToMax,
}

/// Seed-independent part of the frame scheduler: one short decomposition per
/// tree.
#[derive(Clone, Debug)]
pub struct FramePlan {
    chunk_len: u32,
    congestion: u32,
    decompositions: Arc<Vec<PathDecomposition>>,
}

impl FramePlan {
    /// Decomposes every tree with chunk length `chunk_len` (default
    /// `⌈log2 n⌉`).
    pub fn new(instance: &MulticastInstance, chunk_len: Option<u32>) -> Result<FramePlan, SchedulerError> {
        let chunk_len = chunk_len.unwrap_or_else(|| default_chunk_len(instance.node_count()));
        if chunk_len == 0 {
            return Err(SchedulerError::ZeroChunkLength);
        }
        let decompositions = instance.trees().par_iter().map(|t| short_decomposition(t, chunk_len)).collect();
        Ok(FramePlan {
            chunk_len,
            congestion: instance.metrics().congestion,
            decompositions: Arc::new(decompositions),
        })
    }

    pub fn chunk_len(&self) -> u32 {
        self.chunk_len
    }

    pub fn decompositions(&self) -> &[PathDecomposition] {
        &self.decompositions
    }

    /// Size of the offset range, `max(1, ⌈C/ℓ⌉)`.
    pub fn offset_range(&self) -> u32 {
        (math::div_ceil(u64::from(self.congestion), u64::from(self.chunk_len)) as u32).max(1)
    }

    /// Offsets drawn from `seed`, in tree order.
    pub fn draw_offsets(&self, seed: u64) -> Vec<u32> {
        let range = self.offset_range();
        let mut rng = frame_rng(seed, 0);
        (0..self.decompositions.len()).map(|_| rng.gen_range(0..range)).collect()
    }

    /// Frame assignment for explicit offsets.
    pub fn assign(&self, offsets: Vec<u32>) -> FrameAssignment {
        assert_eq!(offsets.len(), self.decompositions.len());
        let frame_count = self
            .decompositions
            .iter()
            .zip(&offsets)
            .filter(|(d, _)| !d.is_empty())
            .map(|(d, &x)| d.max_level() + x)
            .max()
            .unwrap_or(0);
        FrameAssignment {
            chunk_len: self.chunk_len,
            offsets,
            frame_count,
            decompositions: Arc::clone(&self.decompositions),
        }
    }
}

/// Offsets and the resulting frame of every chunk.
#[derive(Clone, Debug)]
pub struct FrameAssignment {
    pub chunk_len: u32,
    /// Offset `X_T` per tree, in instance order.
    pub offsets: Vec<u32>,
    /// Highest frame used (frames are numbered from 1).
    pub frame_count: u32,
    decompositions: Arc<Vec<PathDecomposition>>,
}

impl FrameAssignment {
    pub fn decompositions(&self) -> &[PathDecomposition] {
        &self.decompositions
    }

    /// Frame of chunk `path` of the tree at instance index `tree`.
    pub fn frame_of(&self, tree: usize, path: usize) -> u32 {
        self.decompositions[tree].level(path) + self.offsets[tree]
    }

    /// Chunks grouped by frame; entry `f - 1` lists `(tree, path)` pairs.
    pub fn chunks_by_frame(&self) -> Vec<Vec<(u32, u32)>> {
        let mut frames = vec![Vec::new(); self.frame_count as usize];
        for (t, d) in self.decompositions.iter().enumerate() {
            for p in 0..d.len() {
                frames[self.frame_of(t, p) as usize - 1].push((t as u32, p as u32));
            }
        }
        frames
    }
}

/// Per-(frame, edge) chunk counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrameCongestionProfile {
    /// `(frame, edge, count)` sorted by frame then edge; zero counts omitted.
    pub counts: Vec<(u32, EdgeId, u32)>,
    pub max_frame_congestion: u32,
    /// Longest chunk, at most `ℓ`.
    pub max_frame_dilation: u32,
}

fn frame_edge_keys(instance: &MulticastInstance, assignment: &FrameAssignment) -> Vec<u64> {
    let mut keys = Vec::new();
    for (t, d) in assignment.decompositions.iter().enumerate() {
        for (p, chunk) in d.local_paths().iter().enumerate() {
            let frame = u64::from(assignment.frame_of(t, p));
            for &l in &chunk[1..] {
                let e = instance.parent_edge(t, l as usize);
                keys.push(frame << 32 | u64::from(e.0));
            }
        }
    }
    keys.sort_unstable();
    keys
}

/// Exact per-(frame, edge) counts for `assignment`.
pub fn frame_congestion_profile(instance: &MulticastInstance, assignment: &FrameAssignment) -> FrameCongestionProfile {
    let keys = frame_edge_keys(instance, assignment);
    let counts: Vec<(u32, EdgeId, u32)> = keys
        .chunk_by(|a, b| a == b)
        .map(|run| ((run[0] >> 32) as u32, EdgeId(run[0] as u32), run.len() as u32))
        .collect();
    let max_frame_congestion = counts.iter().map(|c| c.2).max().unwrap_or(0);
    let max_frame_dilation =
        assignment.decompositions.iter().map(|d| d.longest_path() as u32).max().unwrap_or(0);
    FrameCongestionProfile { counts, max_frame_congestion, max_frame_dilation }
}

/// Only the largest per-(frame, edge) count.
pub fn max_frame_congestion(instance: &MulticastInstance, assignment: &FrameAssignment) -> u32 {
    let keys = frame_edge_keys(instance, assignment);
    keys.chunk_by(|a, b| a == b).map(|run| run.len() as u32).max().unwrap_or(0)
}

/// Result of [`frame_multicast_schedule`].
#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub schedule: Schedule,
    pub assignment: FrameAssignment,
    /// Rounds spent in each frame, padding included.
    pub frame_lengths: Vec<u32>,
    /// Inner routing length of each frame, before padding.
    pub routing_lengths: Vec<u32>,
    /// Frames whose routing exceeded a fixed frame length.
    pub overflows: u32,
}

impl FrameOutput {
    pub fn max_routing_length(&self) -> u32 {
        self.routing_lengths.iter().copied().max().unwrap_or(0)
    }
}

/// Options for the frame scheduler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameOptions {
    /// Chunk length `ℓ`; `None` means `⌈log2 n⌉`.
    pub chunk_len: Option<u32>,
    pub padding: FramePadding,
}

/// Frame-based schedule with offsets drawn from `seed`.
pub fn frame_multicast_schedule(
    instance: &MulticastInstance,
    seed: u64,
    options: FrameOptions,
) -> Result<FrameOutput, SchedulerError> {
    let plan = FramePlan::new(instance, options.chunk_len)?;
    let assignment = plan.assign(plan.draw_offsets(seed));
    schedule_assignment(instance, assignment, seed, options.padding)
}

/// Routes the frames of a fixed assignment. Inner delays of frame `f` come
/// from stream `f` of `seed`.
pub fn schedule_assignment(
    instance: &MulticastInstance,
    assignment: FrameAssignment,
    seed: u64,
    padding: FramePadding,
) -> Result<FrameOutput, SchedulerError> {
    let frames = assignment.chunks_by_frame();
    // Causality: a chunk's top must hold the message before its frame.
    let mut holds: Vec<Vec<bool>> = instance
        .trees()
        .iter()
        .map(|t| {
            let mut h = vec![false; t.len()];
            h[0] = true;
            h
        })
        .collect();
    let mut routed: Vec<(Vec<Send>, u32)> = Vec::with_capacity(frames.len());
    for (f, chunks) in frames.iter().enumerate() {
        let mut routes = Vec::with_capacity(chunks.len());
        for &(t, p) in chunks {
            let (t, p) = (t as usize, p as usize);
            let tree = instance.tree(t);
            let d = &assignment.decompositions[t];
            let local = &d.local_paths()[p];
            if !holds[t][local[0] as usize] {
                return Err(SchedulerError::Causality { tree: tree.id(), frame: f as u32 + 1 });
            }
            routes.push(Route {
                message: tree.message(),
                nodes: &d.paths()[p],
                edges: local[1..].iter().map(|&l| instance.parent_edge(t, l as usize)).collect(),
            });
        }
        let mut rng = frame_rng(seed, f as u64 + 1);
        routed.push(route_packets(&routes, &mut rng));
        for &(t, p) in chunks {
            let local = &assignment.decompositions[t as usize].local_paths()[p as usize];
            for &l in &local[1..] {
                holds[t as usize][l as usize] = true;
            }
        }
    }
    let routing_lengths: Vec<u32> = routed.iter().map(|r| r.1).collect();
    let longest = routing_lengths.iter().copied().max().unwrap_or(0);
    let mut overflows = 0;
    let frame_lengths: Vec<u32> = routing_lengths
        .iter()
        .map(|&len| match padding {
            FramePadding::Dynamic => len,
            FramePadding::ToMax => longest,
            FramePadding::Fixed(r) => {
                if len > r {
                    overflows += 1;
                }
                len.max(r)
            }
        })
        .collect();
    let mut sends = Vec::with_capacity(routed.iter().map(|r| r.0.len()).sum());
    let mut base = 0u32;
    for ((frame_sends, _), &len) in routed.into_iter().zip(&frame_lengths) {
        sends.extend(frame_sends.into_iter().map(|s| Send { round: s.round + base, ..s }));
        base += len;
    }
    Ok(FrameOutput {
        schedule: Schedule::with_declared_length(sends, base),
        assignment,
        frame_lengths,
        routing_lengths,
        overflows,
    })
}

/// Upper bound on the number of frames: `⌈C/ℓ⌉ + ⌈D/ℓ⌉ + k`.
pub fn frame_count_bound(congestion: u32, dilation: u32, chunk_len: u32, k: u32) -> u32 {
    let l = u64::from(chunk_len);
    (math::div_ceil(u64::from(congestion), l) + math::div_ceil(u64::from(dilation), l)) as u32 + k
}
