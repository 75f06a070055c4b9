//! Schedulers producing store-and-forward schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{NodeId, TreeId};

mod engine;

pub mod baseline;
pub mod deterministic;
pub mod frames;
pub mod unicast;

pub use baseline::{draw_start_delays, greedy_schedule, random_delay_schedule};
pub use deterministic::{deterministic_schedule, DeterministicOutput, DEFAULT_SEED_CAP};
pub use frames::{
    frame_congestion_profile, frame_count_bound, frame_multicast_schedule, max_frame_congestion,
    schedule_assignment, FrameAssignment, FrameCongestionProfile, FrameOptions, FrameOutput, FramePadding,
    FramePlan,
};
pub use unicast::{unicast_frame_schedule, UnicastPath};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("chunk length must be at least 1")]
    ZeroChunkLength,
    #[error("congestion budget must be at least 1")]
    ZeroBudget,
    #[error("{from}-{to} is not an edge of the graph")]
    NotAGraphEdge { from: NodeId, to: NodeId },
    #[error("tree {tree}: a chunk in frame {frame} starts at a node that does not hold the message yet")]
    Causality { tree: TreeId, frame: u32 },
    #[error("no seed below {cap} meets budget {budget} (best: seed {best_seed:?} with congestion {best_max:?})")]
    NoSeed { cap: u64, budget: u32, best_seed: Option<u64>, best_max: Option<u32> },
}

/// Generator for stream `stream` of `seed`. Stream 0 draws tree offsets;
/// stream `f` draws the inner delays of frame `f`.
pub(crate) fn frame_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
