//! Benchmark grids: generate instances, run schedulers, collect one record
//! per run.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::congest::{distributed_multicast, CongestError, CongestOptions};
use crate::generate::{gen_layered_instance, GenError, LayeredParams};
use crate::instance::MulticastInstance;
use crate::math;
use crate::schedule::{simulate, Schedule};
use crate::schedulers::{
    deterministic_schedule, frame_multicast_schedule, greedy_schedule, random_delay_schedule, FrameOptions,
    SchedulerError, DEFAULT_SEED_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    Greedy,
    RandomDelay,
    Frames,
    Deterministic,
    Congest,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Greedy,
        SchedulerKind::RandomDelay,
        SchedulerKind::Frames,
        SchedulerKind::Deterministic,
        SchedulerKind::Congest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::RandomDelay => "random-delay",
            SchedulerKind::Frames => "frames",
            SchedulerKind::Deterministic => "deterministic",
            SchedulerKind::Congest => "congest",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SweepError::UnknownScheduler(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("unknown scheduler `{0}`")]
    UnknownScheduler(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Congest(#[from] CongestError),
    #[error("{scheduler} produced an invalid schedule: {reason}")]
    Invalid { scheduler: SchedulerKind, reason: String },
}

/// Knobs shared by every scheduler run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub frame: FrameOptionsSpec,
    /// Deterministic scheduler budget as a multiple of `⌈log2 n⌉`.
    pub budget_factor: u32,
    pub seed_cap: u64,
    pub epsilon: f64,
    pub bit_factor: u32,
}

/// Serializable mirror of [`FrameOptions`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameOptionsSpec {
    pub chunk_len: Option<u32>,
    pub padding: crate::schedulers::FramePadding,
}

impl From<FrameOptionsSpec> for FrameOptions {
    fn from(s: FrameOptionsSpec) -> Self {
        FrameOptions { chunk_len: s.chunk_len, padding: s.padding }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { frame: FrameOptionsSpec::default(), budget_factor: 8, seed_cap: DEFAULT_SEED_CAP, epsilon: 0.25, bit_factor: 4 }
    }
}

/// One scheduler's validated output.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub schedule: Schedule,
    pub length: u32,
    pub frame_count: Option<u32>,
    pub max_frame_congestion: Option<u32>,
    /// Seed chosen by the deterministic scheduler.
    pub seed_used: Option<u64>,
    /// Total CONGEST rounds of the distributed multicast.
    pub congest_rounds: Option<u32>,
}

/// Runs one scheduler and checks its schedule with [`simulate`].
pub fn run_scheduler(
    instance: &MulticastInstance,
    kind: SchedulerKind,
    seed: u64,
    options: &RunOptions,
) -> Result<RunResult, SweepError> {
    let mut result = RunResult {
        schedule: Schedule::default(),
        length: 0,
        frame_count: None,
        max_frame_congestion: None,
        seed_used: None,
        congest_rounds: None,
    };
    match kind {
        SchedulerKind::Greedy => result.schedule = greedy_schedule(instance),
        SchedulerKind::RandomDelay => result.schedule = random_delay_schedule(instance, seed),
        SchedulerKind::Frames => {
            let out = frame_multicast_schedule(instance, seed, options.frame.into())?;
            result.frame_count = Some(out.assignment.frame_count);
            result.max_frame_congestion =
                Some(crate::schedulers::max_frame_congestion(instance, &out.assignment));
            result.schedule = out.schedule;
        }
        SchedulerKind::Deterministic => {
            let budget = options.budget_factor * math::log_n(u64::from(instance.node_count()));
            let out = deterministic_schedule(instance, budget, options.seed_cap, options.frame.into())?;
            result.frame_count = Some(out.frames.assignment.frame_count);
            result.max_frame_congestion = Some(out.max_frame_congestion);
            result.seed_used = Some(out.seed);
            result.schedule = out.frames.schedule;
        }
        SchedulerKind::Congest => {
            let o = CongestOptions { epsilon: options.epsilon, bit_factor: options.bit_factor, seed, ..Default::default() };
            let out = distributed_multicast(instance, &o, true)?;
            result.frame_count = Some(out.frames);
            result.max_frame_congestion = Some(out.max_frame_congestion);
            result.congest_rounds = Some(out.rounds);
            result.schedule = out.schedule;
        }
    }
    let report = simulate(instance, &result.schedule);
    if !report.valid {
        let reason = report.violations.first().map_or_else(String::new, ToString::to_string);
        return Err(SweepError::Invalid { scheduler: kind, reason });
    }
    result.length = report
        .length
        .ok_or_else(|| SweepError::Invalid { scheduler: kind, reason: "some leaf never receives its message".into() })?;
    Ok(result)
}

/// `length / (C + D + ⌈log2 n⌉²)`.
pub fn additive_ratio(length: u32, congestion: u32, dilation: u32, node_count: u32) -> f64 {
    let l = f64::from(math::log_n(u64::from(node_count)));
    f64::from(length) / (f64::from(congestion) + f64::from(dilation) + l * l)
}

/// One grid cell: node count and target congestion and depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: u32,
    pub congestion: u32,
    pub depth: u32,
}

/// A sweep: every scheduler on every cell for every seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub cells: Vec<GridCell>,
    pub seeds: Vec<u64>,
    pub schedulers: Vec<SchedulerKind>,
    pub options: RunOptions,
}

impl SuiteSpec {
    /// Cells with `C = D = m·⌈log2 n⌉²` for each `n` and multiplier `m`;
    /// depths are clamped to `n - 1`.
    pub fn polylog_grid(ns: &[u32], multipliers: &[u32]) -> Vec<GridCell> {
        ns.iter()
            .flat_map(|&n| {
                let l = math::log_n(u64::from(n));
                multipliers.iter().map(move |&m| {
                    let c = m * l * l;
                    GridCell { n, congestion: c, depth: c.min(n - 1) }
                })
            })
            .collect()
    }

    pub fn run_count(&self) -> usize {
        self.cells.len() * self.seeds.len() * self.schedulers.len()
    }
}

/// One CSV row. `wall_ms` is the only column that varies between runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: u32,
    pub congestion: u32,
    pub dilation: u32,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub length: Option<u32>,
    pub frame_count: Option<u32>,
    pub max_frame_congestion: Option<u32>,
    pub ratio: Option<f64>,
    pub congest_rounds: Option<u32>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

/// Column names of [`BenchRecord`] in CSV order.
pub const BENCH_COLUMNS: [&str; 12] = [
    "n",
    "congestion",
    "dilation",
    "scheduler",
    "seed",
    "length",
    "frame_count",
    "max_frame_congestion",
    "ratio",
    "congest_rounds",
    "wall_ms",
    "error",
];

/// Runs the suite. Instances are generated once per (cell, seed); runs
/// execute in parallel and rows come back in spec order. A failed run
/// becomes a row with `error` set.
pub fn run_suite(spec: &SuiteSpec) -> Vec<BenchRecord> {
    let jobs: Vec<(GridCell, u64)> =
        spec.cells.iter().flat_map(|&c| spec.seeds.iter().map(move |&s| (c, s))).collect();
    jobs.par_iter()
        .flat_map_iter(|&(cell, seed)| {
            let instance = gen_layered_instance(LayeredParams::new(cell.n, cell.congestion, cell.depth, seed));
            spec.schedulers.iter().map(move |&kind| match &instance {
                Ok(inst) => bench_one(inst, kind, seed, &spec.options),
                Err(e) => BenchRecord {
                    n: cell.n,
                    congestion: cell.congestion,
                    dilation: cell.depth,
                    scheduler: kind,
                    seed,
                    length: None,
                    frame_count: None,
                    max_frame_congestion: None,
                    ratio: None,
                    congest_rounds: None,
                    wall_ms: 0.0,
                    error: Some(e.to_string()),
                },
            }).collect::<Vec<_>>()
        })
        .collect()
}

/// Runs one scheduler on one instance and records the outcome.
pub fn bench_one(instance: &MulticastInstance, kind: SchedulerKind, seed: u64, options: &RunOptions) -> BenchRecord {
    let m = instance.metrics();
    let start = Instant::now();
    let outcome = run_scheduler(instance, kind, seed, options);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut record = BenchRecord {
        n: m.node_count,
        congestion: m.congestion,
        dilation: m.dilation,
        scheduler: kind,
        seed,
        length: None,
        frame_count: None,
        max_frame_congestion: None,
        ratio: None,
        congest_rounds: None,
        wall_ms,
        error: None,
    };
    match outcome {
        Ok(r) => {
            record.length = Some(r.length);
            record.frame_count = r.frame_count;
            record.max_frame_congestion = r.max_frame_congestion;
            record.ratio = Some(additive_ratio(r.length, m.congestion, m.dilation, m.node_count));
            record.congest_rounds = r.congest_rounds;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheduler_names_round_trip() {
        for k in SchedulerKind::ALL {
            assert_eq!(k.name().parse::<SchedulerKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("fastest".parse::<SchedulerKind>().is_err());
    }

    #[test]
    fn empty_suite_has_no_rows() {
        assert!(run_suite(&SuiteSpec::default()).is_empty());
    }

    #[test]
    fn grid_rows_in_spec_order() {
        let spec = SuiteSpec {
            cells: vec![
                GridCell { n: 40, congestion: 3, depth: 3 },
                GridCell { n: 60, congestion: 5, depth: 4 },
                GridCell { n: 80, congestion: 7, depth: 6 },
            ],
            seeds: (0..5).collect(),
            schedulers: vec![SchedulerKind::Greedy, SchedulerKind::Frames],
            options: RunOptions::default(),
        };
        let rows = run_suite(&spec);
        assert_eq!(rows.len(), 30);
        assert_eq!(spec.run_count(), 30);
        let mut i = 0;
        for cell in &spec.cells {
            for &seed in &spec.seeds {
                for &k in &spec.schedulers {
                    let r = &rows[i];
                    assert_eq!((r.n, r.congestion, r.dilation, r.seed, r.scheduler), (cell.n, cell.congestion, cell.depth, seed, k));
                    assert!(r.error.is_none(), "{:?}", r.error);
                    let len = r.length.unwrap();
                    assert!(len >= r.congestion.max(r.dilation));
                    if k == SchedulerKind::Greedy {
                        assert!(len <= r.congestion * r.dilation);
                    }
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn all_schedulers_deliver_the_same_messages() {
        let inst = crate::generate::gen_random_instance(64, 6, 5, 2).unwrap();
        for k in SchedulerKind::ALL {
            let r = run_scheduler(&inst, k, 3, &RunOptions::default()).unwrap();
            let report = simulate(&inst, &r.schedule);
            assert!(report.per_tree_completion_round.values().all(Option::is_some), "{k}");
        }
    }

    #[test]
    fn generation_failure_becomes_an_error_row() {
        let spec = SuiteSpec {
            cells: vec![GridCell { n: 5, congestion: 2, depth: 9 }],
            seeds: vec![0],
            schedulers: vec![SchedulerKind::Greedy],
            options: RunOptions::default(),
        };
        let rows = run_suite(&spec);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_some());
    }

    #[test]
    fn polylog_grid_clamps_depth() {
        let cells = SuiteSpec::polylog_grid(&[256], &[1, 4]);
        assert_eq!(cells[0], GridCell { n: 256, congestion: 64, depth: 64 });
        assert_eq!(cells[1], GridCell { n: 256, congestion: 256, depth: 255 });
    }
}
