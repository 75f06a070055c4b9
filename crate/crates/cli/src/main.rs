//! `mcast`: generate multicast instances, schedule them, validate schedules,
//! inspect decompositions, run the CONGEST simulation and benchmark sweeps.
//!
//! Exit codes: 0 success, 1 validation or parameter error, 2 internal
//! invariant breach.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mcast_core::congest::{
    distributed_multicast, distributed_rank_decomposition, message_size_audit, CongestOptions,
};
use mcast_core::decomposition::{
    default_chunk_len, heavy_path_decomposition, rank_decomposition, short_decomposition, short_k, verify_short,
};
use mcast_core::generate::{gen_layered_instance, gen_random_instance, LayeredParams};
use mcast_core::lowerbound::{build_lowerbound, check_lemmas, exhaustive_opt, markov_delay_check, pad_to_n, BuildLimits};
use mcast_core::schedulers::FramePadding;
use mcast_core::sweep::{
    additive_ratio, run_scheduler, run_suite, BenchRecord, FrameOptionsSpec, RunOptions, SchedulerKind,
    SuiteSpec, SweepError, BENCH_COLUMNS,
};
use mcast_core::{simulate, validate_instance, InstanceFile, MulticastInstance, Schedule};

const BENCH_HELP: &str = "CSV columns, in order:
  n                      node count
  congestion             C of the generated instance
  dilation               D of the generated instance
  scheduler              greedy | random-delay | frames | deterministic | congest
  seed                   generator and scheduler seed
  length                 simulated schedule length (empty on error)
  frame_count            frames used (frame-based schedulers only)
  max_frame_congestion   largest per-frame edge load
  ratio                  length / (C + D + ceil(log2 n)^2)
  congest_rounds         total CONGEST rounds (congest only)
  wall_ms                wall-clock milliseconds (the only nondeterministic column)
  error                  failure message when the run failed";

#[derive(Parser, Debug)]
#[command(name = "mcast", version, about = "Simultaneous multicast scheduling in the store-and-forward model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a scheduler, validate its output and write the schedule.
    Schedule(ScheduleArgs),
    /// Check an instance file and optionally a schedule against it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Path decompositions of every tree, with their shortness reports.
    Decompose {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = DecompKind::Short)]
        kind: DecompKind,
        /// Chunk length for `short`; defaults to ceil(log2 n).
        #[arg(long)]
        chunk_len: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the distributed decomposition and multicast in the CONGEST simulator.
    CongestSim(CongestArgs),
    /// Run a benchmark sweep and write CSV rows.
    #[command(after_long_help = BENCH_HELP)]
    Bench(BenchArgs),
    /// Structural checks of a lower-bound instance.
    CheckLemmas {
        #[arg(long)]
        congestion: u32,
        #[arg(long)]
        depth: u32,
        /// Also run these schedulers and check their delays on the instance.
        #[arg(long, value_delimiter = ',', value_parser = parse_scheduler)]
        schedulers: Vec<SchedulerKind>,
        #[arg(long, env = "MCAST_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Exact optimum of a tiny instance by exhaustive search.
    Opt {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 8)]
        horizon: u32,
    },
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Random trees in a random connected graph.
    Random {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        trees: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long, env = "MCAST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Layered instance with exact congestion and dilation.
    Layered {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        congestion: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long, env = "MCAST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recursive lower-bound instance forcing length CD/2.
    Lowerbound {
        #[arg(long)]
        congestion: u32,
        #[arg(long)]
        depth: u32,
        /// Add isolated nodes up to this node count.
        #[arg(long)]
        pad_to: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecompKind {
    Heavy,
    Rank,
    Short,
}

#[derive(Args, Debug, Clone)]
struct FrameFlags {
    /// Chunk length for frame-based schedulers; defaults to ceil(log2 n).
    #[arg(long)]
    chunk_len: Option<u32>,
    /// Frame padding: `dynamic`, `max`, or a fixed round count.
    #[arg(long, default_value = "dynamic", value_parser = parse_padding)]
    padding: FramePadding,
    /// Deterministic scheduler budget as a multiple of ceil(log2 n).
    #[arg(long, default_value_t = 8)]
    budget_factor: u32,
    #[arg(long, default_value_t = mcast_core::schedulers::DEFAULT_SEED_CAP)]
    seed_cap: u64,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 4)]
    bit_factor: u32,
}

impl FrameFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            frame: FrameOptionsSpec { chunk_len: self.chunk_len, padding: self.padding },
            budget_factor: self.budget_factor,
            seed_cap: self.seed_cap,
            epsilon: self.epsilon,
            bit_factor: self.bit_factor,
        }
    }
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_scheduler)]
    scheduler: SchedulerKind,
    #[arg(long, env = "MCAST_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: FrameFlags,
}

#[derive(Args, Debug)]
struct CongestArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, env = "MCAST_SEED", default_value_t = 0)]
    seed: u64,
    /// Nodes start out knowing their depth in each tree.
    #[arg(long)]
    depths_known: bool,
    #[arg(long, default_value_t = 4)]
    bit_factor: u32,
    /// Fixed frame length in rounds; overflows are counted.
    #[arg(long)]
    fixed_frame_len: Option<u32>,
    /// Only run the decomposition.
    #[arg(long)]
    decompose_only: bool,
    /// Write every payload as JSON lines to this file.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    round_limit: Option<u32>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// JSON suite spec `{cells: [{n, congestion, depth}], seeds, schedulers, options}`.
    #[arg(long, conflicts_with_all = ["n", "multipliers"])]
    suite: Option<PathBuf>,
    /// Node counts of a C = D = m·ceil(log2 n)^2 grid.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    /// Multipliers m of the grid.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    multipliers: Vec<u32>,
    /// Seeds, as a list or a range `a..b`.
    #[arg(long, default_value = "0")]
    seeds: String,
    #[arg(long, value_delimiter = ',', value_parser = parse_scheduler, default_value = "greedy,frames")]
    schedulers: Vec<SchedulerKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: FrameFlags,
}

fn parse_scheduler(s: &str) -> Result<SchedulerKind, String> {
    s.parse().map_err(|e: SweepError| e.to_string())
}

fn parse_padding(s: &str) -> Result<FramePadding, String> {
    match s {
        "dynamic" => Ok(FramePadding::Dynamic),
        "max" => Ok(FramePadding::ToMax),
        _ => s
            .parse::<u32>()
            .ok()
            .filter(|&r| r > 0)
            .map(FramePadding::Fixed)
            .ok_or_else(|| format!("expected `dynamic`, `max` or a positive round count, got `{s}`")),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        return Ok((a..b).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| Ok(t.trim().parse()?)).collect()
}

/// An error that signals a bug rather than bad input.
#[derive(Debug)]
struct Internal(String);

impl std::fmt::Display for Internal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

fn read_instance(path: &Path) -> Result<MulticastInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MulticastInstance::from_json(&text).with_context(|| format!("loading instance {}", path.display()))
}

fn read_schedule(path: &Path) -> Result<Schedule> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Schedule::from_json(&text).with_context(|| format!("loading schedule {}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

/// Writes the instance and reports its metrics. The report goes to stdout
/// when the instance goes to a file, to stderr otherwise.
fn emit_instance(instance: &MulticastInstance, out: Option<&Path>, extra: serde_json::Value) -> Result<()> {
    write_text(out, &instance.to_json())?;
    let m = instance.metrics();
    let mut report = json!({
        "n": m.node_count,
        "congestion": m.congestion,
        "dilation": m.dilation,
        "trees": instance.trees().len(),
        "edges": instance.graph().edge_count(),
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (report.as_object_mut(), extra) {
        obj.extend(more);
    }
    if out.is_some() {
        print_json(&report)
    } else {
        eprintln!("{}", serde_json::to_string(&report)?);
        Ok(())
    }
}

fn cmd_gen(kind: GenKind) -> Result<()> {
    match kind {
        GenKind::Random { n, trees, depth, seed, out } => {
            let inst = gen_random_instance(n, trees, depth, seed)?;
            emit_instance(&inst, out.as_deref(), json!({}))
        }
        GenKind::Layered { n, congestion, depth, seed, out } => {
            let inst = gen_layered_instance(LayeredParams::new(n, congestion, depth, seed))?;
            emit_instance(&inst, out.as_deref(), json!({}))
        }
        GenKind::Lowerbound { congestion, depth, pad_to, out } => {
            let lb = build_lowerbound(congestion, depth, BuildLimits::default())?;
            let inst = match pad_to {
                Some(n) => pad_to_n(&lb.instance, n)?,
                None => lb.instance.clone(),
            };
            let s = lb.stats;
            emit_instance(&inst, out.as_deref(), json!({ "stats": { "m_D": s.m_d, "nodes": s.nodes, "labels": s.labels } }))
        }
    }
}

fn cmd_schedule(args: ScheduleArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let options = args.flags.options();
    let r = match run_scheduler(&inst, args.scheduler, args.seed, &options) {
        Ok(r) => r,
        Err(e @ SweepError::Invalid { .. }) => return Err(Internal(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.out {
        fs::write(path, r.schedule.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    let m = inst.metrics();
    print_json(&json!({
        "scheduler": args.scheduler,
        "seed": args.seed,
        "n": m.node_count,
        "congestion": m.congestion,
        "dilation": m.dilation,
        "length": r.length,
        "ratio": additive_ratio(r.length, m.congestion, m.dilation, m.node_count),
        "frame_count": r.frame_count,
        "max_frame_congestion": r.max_frame_congestion,
        "seed_used": r.seed_used,
        "congest_rounds": r.congest_rounds,
    }))
}

/// Returns whether everything checked out.
fn cmd_validate(instance: &Path, schedule: Option<&Path>) -> Result<bool> {
    let text = fs::read_to_string(instance).with_context(|| format!("reading {}", instance.display()))?;
    let file: InstanceFile = serde_json::from_str(&text).context("parsing instance JSON")?;
    let report = validate_instance(&file);
    if !report.is_valid() {
        print_json(&json!({
            "instance_valid": false,
            "violations": report.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }))?;
        return Ok(false);
    }
    let inst = MulticastInstance::from_file(&file)?;
    let m = inst.metrics();
    let mut out = json!({
        "instance_valid": true,
        "n": m.node_count,
        "congestion": m.congestion,
        "dilation": m.dilation,
    });
    let mut ok = true;
    if let Some(path) = schedule {
        let s = read_schedule(path)?;
        let r = simulate(&inst, &s);
        ok = r.valid && r.length.is_some();
        out["schedule_valid"] = json!(r.valid);
        out["complete"] = json!(r.length.is_some());
        out["length"] = json!(r.length);
        out["violations"] = json!(r.violations.iter().map(ToString::to_string).collect::<Vec<_>>());
        out["redundant_sends"] = json!(r.redundant.len());
    }
    print_json(&out)?;
    Ok(ok)
}

fn cmd_decompose(instance: &Path, kind: DecompKind, chunk_len: Option<u32>, out: Option<&Path>) -> Result<()> {
    let inst = read_instance(instance)?;
    let n = inst.node_count();
    let chunk = chunk_len.unwrap_or_else(|| default_chunk_len(n));
    if chunk == 0 {
        bail!("--chunk-len must be positive");
    }
    let k = short_k(n);
    let trees: Vec<serde_json::Value> = inst
        .trees()
        .iter()
        .map(|tree| {
            let d = match kind {
                DecompKind::Heavy => heavy_path_decomposition(tree),
                DecompKind::Rank => rank_decomposition(tree).0,
                DecompKind::Short => short_decomposition(tree, chunk),
            };
            let report = verify_short(&d, tree, chunk, k);
            json!({ "tree": tree.id().0, "decomposition": d.to_file(), "short": report })
        })
        .collect();
    let text = serde_json::to_string(&json!({ "kind": format!("{kind:?}").to_lowercase(), "chunk_len": chunk, "k": k, "trees": trees }))?;
    write_text(out, &text)
}

fn cmd_congest(args: CongestArgs) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let options = CongestOptions {
        epsilon: args.epsilon,
        bit_factor: args.bit_factor,
        seed: args.seed,
        fixed_frame_len: args.fixed_frame_len,
        record: args.transcript.is_some(),
        max_rounds: args.round_limit,
    };
    let decomposition_json = |d: &mcast_core::congest::DistributedDecomposition| {
        json!({
            "chunk_len": d.chunk_len,
            "rounds": d.rounds,
            "trees": d.decompositions.iter().map(|p| p.to_file()).collect::<Vec<_>>(),
        })
    };
    let (result, transcript) = if args.decompose_only {
        let d = distributed_rank_decomposition(&inst, &options)?;
        (json!({ "rounds": d.transcript.rounds, "decomposition": decomposition_json(&d) }), d.transcript)
    } else {
        let mut out = distributed_multicast(&inst, &options, args.depths_known)?;
        let report = simulate(&inst, &out.schedule);
        if !report.valid || report.length.is_none() {
            return Err(Internal("distributed multicast produced an invalid schedule".into()).into());
        }
        let mut v = json!({
            "rounds": out.rounds,
            "preprocessing_rounds": out.preprocessing_rounds,
            "multicast_rounds": out.multicast_rounds,
            "frames": out.frames,
            "range_len": out.range_len,
            "max_frame_congestion": out.max_frame_congestion,
            "schedule": out.schedule.to_file(),
        });
        if let Some(d) = &out.decomposition {
            v["decomposition"] = decomposition_json(d);
        }
        (v, std::mem::take(&mut out.transcript))
    };
    let audit = message_size_audit(&transcript);
    let mut result = result;
    result["max_bits"] = json!(audit.max_bits);
    result["budget"] = json!(audit.budget);
    result["audit_pass"] = json!(audit.pass);
    result["bit_histogram"] = json!(audit.histogram);
    if let Some(path) = &args.transcript {
        let mut text = String::new();
        for r in transcript.records() {
            text.push_str(&serde_json::to_string(&r)?);
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if !audit.pass {
        return Err(Internal(format!("payloads over budget: {:?}", audit.offenders.first())).into());
    }
    print_json(&result)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let spec = match &args.suite {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SuiteSpec>(&text).context("parsing suite spec")?
        }
        None => SuiteSpec {
            cells: SuiteSpec::polylog_grid(&args.n, &args.multipliers),
            seeds: parse_seeds(&args.seeds)?,
            schedulers: args.schedulers.clone(),
            options: args.flags.options(),
        },
    };
    let rows = run_suite(&spec);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    match &args.out {
        Some(p) => fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} rows, {} failed", rows.len(), failed);
    Ok(())
}

/// CSV with a fixed header, even when there are no rows.
fn write_csv(rows: &[BenchRecord], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(BENCH_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_check_lemmas(congestion: u32, depth: u32, schedulers: &[SchedulerKind], seed: u64) -> Result<bool> {
    let lb = build_lowerbound(congestion, depth, BuildLimits::default())?;
    let report = check_lemmas(&lb, congestion, depth);
    let mut ok = report.pass();
    let mut runs = Vec::new();
    for &kind in schedulers {
        let r = run_scheduler(&lb.instance, kind, seed, &RunOptions::default())
            .map_err(|e| anyhow!("{kind} on the lower-bound instance: {e}"))?;
        let markov = markov_delay_check(&lb.instance, &r.schedule);
        let bound = congestion * depth / 2;
        ok &= markov.pass && r.length >= bound;
        runs.push(json!({
            "scheduler": kind,
            "length": r.length,
            "length_at_least_cd_over_2": r.length >= bound,
            "markov_pass": markov.pass,
            "markov_failing_edges": markov.failing.len(),
        }));
    }
    print_json(&json!({
        "congestion": congestion,
        "depth": depth,
        "pass": ok,
        "lemmas": report,
        "stats": { "m_D": lb.stats.m_d, "nodes": lb.stats.nodes, "labels": lb.stats.labels },
        "schedulers": runs,
    }))?;
    Ok(ok)
}

fn cmd_opt(instance: &Path, horizon: u32) -> Result<()> {
    let inst = read_instance(instance)?;
    let outcome = exhaustive_opt(&inst, horizon)?;
    let m = inst.metrics();
    print_json(&json!({
        "congestion": m.congestion,
        "dilation": m.dilation,
        "horizon": horizon,
        "result": outcome,
    }))
}

/// `Ok(false)` means a clean run that found the input invalid.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { kind } => cmd_gen(kind).map(|_| true),
        Command::Schedule(args) => cmd_schedule(args).map(|_| true),
        Command::Validate { instance, schedule } => cmd_validate(&instance, schedule.as_deref()),
        Command::Decompose { instance, kind, chunk_len, out } => {
            cmd_decompose(&instance, kind, chunk_len, out.as_deref()).map(|_| true)
        }
        Command::CongestSim(args) => cmd_congest(args).map(|_| true),
        Command::Bench(args) => cmd_bench(args).map(|_| true),
        Command::CheckLemmas { congestion, depth, schedulers, seed } => {
            cmd_check_lemmas(congestion, depth, &schedulers, seed)
        }
        Command::Opt { instance, horizon } => cmd_opt(&instance, horizon).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Internal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
