//! Deterministic frame scheduling by seed search.
//!
//! Seeds `0, 1, 2, …` are tried in order; the first one whose offsets keep
//! every per-frame edge count within the budget is used. Candidates are
//! evaluated in parallel but the smallest qualifying seed always wins.

use rayon::prelude::*;

use super::frames::{max_frame_congestion, schedule_assignment, FrameOptions, FrameOutput, FramePlan};
use super::SchedulerError;
use crate::instance::MulticastInstance;

/// Default number of seeds tried before giving up.
pub const DEFAULT_SEED_CAP: u64 = 1024;

/// Result of [`deterministic_schedule`].
#[derive(Clone, Debug)]
pub struct DeterministicOutput {
    pub seed: u64,
    /// Largest per-frame edge count under the accepted seed.
    pub max_frame_congestion: u32,
    pub frames: FrameOutput,
}

/// Frame schedule from the smallest seed below `seed_cap` whose
/// per-frame congestion is at most `budget`.
pub fn deterministic_schedule(
    instance: &MulticastInstance,
    budget: u32,
    seed_cap: u64,
    options: FrameOptions,
) -> Result<DeterministicOutput, SchedulerError> {
    if budget == 0 {
        return Err(SchedulerError::ZeroBudget);
    }
    let plan = FramePlan::new(instance, options.chunk_len)?;
    let congestion_for = |seed: u64| max_frame_congestion(instance, &plan.assign(plan.draw_offsets(seed)));
    let found = (0..seed_cap).into_par_iter().map(|s| (s, congestion_for(s))).find_first(|&(_, c)| c <= budget);
    match found {
        Some((seed, max)) => {
            let frames = schedule_assignment(instance, plan.assign(plan.draw_offsets(seed)), seed, options.padding)?;
            Ok(DeterministicOutput { seed, max_frame_congestion: max, frames })
        }
        None => {
            let best = (0..seed_cap).into_par_iter().map(|s| (congestion_for(s), s)).min();
            let (best_max, best_seed) = best.map_or((None, None), |(c, s)| (Some(c), Some(s)));
            Err(SchedulerError::NoSeed { cap: seed_cap, budget, best_seed, best_max })
        }
    }
}
