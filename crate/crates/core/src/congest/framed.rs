//! Time frames on top of the lock-step runner.
//!
//! At the start of a frame each node queues bit strings for its neighbors;
//! the queues drain at up to `B` bits per edge per round. The frame ends
//! once every queue is empty (a simulator-level synchronizer), or after a
//! fixed number of rounds when those are configured, stretching and
//! counting an overflow if the queues need longer. A frame lasts at least
//! one round.

use bitvec::prelude::*;

use super::runner::{CongestRunner, NodeProgram};
use super::CongestError;
use crate::instance::NodeId;

/// Per-neighbor outgoing queues and incoming buffers of one node.
#[derive(Clone, Debug, Default)]
pub struct Links {
    neighbors: Vec<NodeId>,
    out: Vec<BitVec>,
    sent: Vec<usize>,
    inbox: Vec<BitVec>,
    budget: usize,
}

impl Links {
    /// `neighbors` must be sorted.
    pub fn new(neighbors: Vec<NodeId>, budget: u32) -> Links {
        let k = neighbors.len();
        Links { neighbors, out: vec![BitVec::new(); k], sent: vec![0; k], inbox: vec![BitVec::new(); k], budget: budget as usize }
    }

    pub fn index_of(&self, v: NodeId) -> usize {
        self.neighbors.binary_search(&v).expect("not a neighbor")
    }

    pub fn neighbor(&self, i: usize) -> NodeId {
        self.neighbors[i]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Queue for neighbor `i` in the current frame.
    pub fn queue(&mut self, i: usize) -> &mut BitVec {
        &mut self.out[i]
    }

    pub fn pending(&self) -> bool {
        self.out.iter().zip(&self.sent).any(|(q, &s)| s < q.len())
    }

    fn send(&mut self, out: &mut Vec<(NodeId, BitVec)>) {
        for i in 0..self.neighbors.len() {
            let (q, s) = (&self.out[i], self.sent[i]);
            if s < q.len() {
                let end = (s + self.budget).min(q.len());
                out.push((self.neighbors[i], q[s..end].to_bitvec()));
                self.sent[i] = end;
            }
        }
    }

    fn receive(&mut self, from: NodeId, payload: &BitSlice) {
        let i = self.index_of(from);
        self.inbox[i].extend_from_bitslice(payload);
    }

    /// Everything received from neighbor `i` this frame; clears it.
    pub fn take_inbox(&mut self, i: usize) -> BitVec {
        std::mem::take(&mut self.inbox[i])
    }

    fn reset_out(&mut self) {
        for (q, s) in self.out.iter_mut().zip(self.sent.iter_mut()) {
            q.clear();
            *s = 0;
        }
    }
}

/// Node behaviour in terms of frames.
pub trait FramedProgram: std::marker::Send {
    fn links(&mut self) -> &mut Links;
    fn links_ref(&self) -> &Links;
    /// Queue this frame's bits.
    fn begin_frame(&mut self, frame: u32);
    /// Consume the bits received this frame.
    fn end_frame(&mut self, frame: u32);
}

/// Adapts a [`FramedProgram`] to the round runner.
pub struct Framed<P>(pub P);

impl<P: FramedProgram> NodeProgram for Framed<P> {
    fn send(&mut self, _round: u32, out: &mut Vec<(NodeId, BitVec)>) {
        self.0.links().send(out);
    }

    fn receive(&mut self, _round: u32, from: NodeId, payload: &BitSlice) {
        self.0.links().receive(from, payload);
    }

    fn done(&self) -> bool {
        !self.0.links_ref().pending()
    }
}

/// Round accounting of a run of frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub frames: u32,
    pub rounds: u32,
    pub longest_frame: u32,
    pub overflows: u32,
}

/// Runs frames `0..count`.
pub fn run_frames<P: FramedProgram>(
    runner: &mut CongestRunner<'_, Framed<P>>,
    count: u32,
    fixed_len: Option<u32>,
    max_rounds: u32,
) -> Result<FrameStats, CongestError> {
    let mut stats = FrameStats::default();
    for f in 0..count {
        runner.programs_mut().iter_mut().for_each(|p| p.0.begin_frame(f));
        let mut used = 0u32;
        loop {
            let busy = runner.programs().iter().any(|p| p.0.links_ref().pending());
            let padding = fixed_len.is_some_and(|r| used < r);
            if !busy && !padding && used > 0 {
                break;
            }
            if runner.round() >= max_rounds {
                return Err(CongestError::NoTermination { max_rounds });
            }
            runner.step()?;
            used += 1;
        }
        if fixed_len.is_some_and(|r| used > r) {
            stats.overflows += 1;
        }
        runner.programs_mut().iter_mut().for_each(|p| {
            p.0.end_frame(f);
            p.0.links().reset_out();
        });
        stats.frames += 1;
        stats.rounds += used;
        stats.longest_frame = stats.longest_frame.max(used);
    }
    Ok(stats)
}
