//! Synchronous CONGEST simulation: every round each node may send one
//! payload of at most `B = bit_factor·⌈log2 n⌉` bits to each neighbor.
//!
//! * [`runner`]: the lock-step runner, transcripts and the size audit.
//! * [`framed`]: time frames built from per-neighbor bit queues.
//! * [`rank_decomp`]: the distributed rank-based short decomposition.
//! * [`multicast`]: the distributed multicast built on top of it.

pub(crate) mod bits;
pub mod framed;
mod local;
pub mod multicast;
pub mod rank_decomp;
pub mod runner;

pub use framed::{run_frames, FrameStats, Framed, FramedProgram, Links};
pub use multicast::{distributed_multicast, multicast_range_len, DistributedMulticast};
pub use rank_decomp::{
    decomposition_chunk_len, decomposition_round_shape, distributed_rank_decomposition, DistributedDecomposition,
    PhaseRounds,
};
pub use runner::{
    message_size_audit, run_congest, AuditReport, CongestNetwork, CongestRunner, CongestTranscript, NodeProgram,
    PayloadRecord,
};

use crate::instance::{NodeId, TreeId};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CongestError {
    #[error("round {round}: {from} sent {bits} bits to {to}, budget is {budget}")]
    Budget { round: u32, from: NodeId, to: NodeId, bits: u32, budget: u32 },
    #[error("round {round}: {from} sent to {to}, which is not a neighbor")]
    NotNeighbor { round: u32, from: NodeId, to: NodeId },
    #[error("round {round}: {from} sent two payloads to {to}")]
    DuplicatePayload { round: u32, from: NodeId, to: NodeId },
    #[error("no termination within {max_rounds} rounds")]
    NoTermination { max_rounds: u32 },
    #[error("{phase}: {source}")]
    InPhase { phase: &'static str, source: Box<CongestError> },
    #[error("tree {tree}: node {node} never completed")]
    Incomplete { tree: TreeId, node: NodeId },
    #[error("tree {tree}: assembled decomposition is invalid: {reason}")]
    Assembly { tree: TreeId, reason: String },
}

impl CongestError {
    pub(crate) fn in_phase(phase: &'static str) -> impl FnOnce(CongestError) -> CongestError {
        move |e| CongestError::InPhase { phase, source: Box::new(e) }
    }
}

/// Parameters shared by the distributed algorithms.
#[derive(Clone, Debug, PartialEq)]
pub struct CongestOptions {
    pub epsilon: f64,
    /// `B = bit_factor·⌈log2 n⌉`.
    pub bit_factor: u32,
    /// Shared random seed.
    pub seed: u64,
    /// Fixed frame length in rounds; `None` lets frames drain their queues.
    pub fixed_frame_len: Option<u32>,
    /// Keep every payload in the transcript.
    pub record: bool,
    /// Round limit; `None` uses a multiple of the expected bound.
    pub max_rounds: Option<u32>,
}

impl Default for CongestOptions {
    fn default() -> Self {
        CongestOptions { epsilon: 0.25, bit_factor: 4, seed: 0, fixed_frame_len: None, record: false, max_rounds: None }
    }
}
