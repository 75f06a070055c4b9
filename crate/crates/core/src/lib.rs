//! Scheduling simultaneous multicasts in the store-and-forward packet model.
//!
//! The crate is organized around [`MulticastInstance`] (a graph plus rooted
//! multicast trees) and [`Schedule`] (per-round edge sends):
//!
//! * [`instance`] and [`generate`]: the data model, metrics, JSON format and
//!   seeded generators.
//! * [`schedule`]: replaying schedules and checking every model constraint.
//! * [`decomposition`]: heavy-path and rank-based path decompositions and
//!   their refinement into short paths with levels.
//! * [`schedulers`]: greedy, random-delay, frame-based and seed-searched
//!   deterministic schedulers.
//! * [`lowerbound`]: the recursive congestion-times-dilation lower-bound
//!   construction, its structural checks and a tiny exact-optimum search.
//! * [`congest`]: a bit-budgeted synchronous message-passing simulator
//!   running the distributed decomposition and multicast.
//! * [`sweep`]: benchmark grids producing CSV rows.

pub mod congest;
pub mod decomposition;
pub mod generate;
pub mod instance;
pub mod lowerbound;
pub mod math;
pub mod schedule;
pub mod schedulers;
pub mod sweep;

pub use decomposition::{DecompositionKind, PathDecomposition, RankMap};
pub use instance::{
    compute_metrics, validate_instance, Edge, EdgeId, Graph, InstanceFile, InstanceMetrics,
    MulticastInstance, MulticastTree, NodeId, TreeId, ValidationReport,
};
pub use schedule::{simulate, DeliveryReport, Schedule, Send};

/// Crate-level error for the few entry points that can fail in more than one
/// subsystem (JSON parsing plus validation).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] instance::InstanceError),
    #[error(transparent)]
    Schedule(#[from] schedule::ScheduleError),
}
