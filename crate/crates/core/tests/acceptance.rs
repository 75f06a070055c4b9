//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so criteria execute one at a time (the large ones need most of
//! the memory) while each criterion parallelizes internally.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mcast_core::congest::{
    decomposition_round_shape, distributed_multicast, distributed_rank_decomposition, message_size_audit,
    multicast_range_len, CongestOptions,
};
use mcast_core::decomposition::{
    compute_ranks, heavy_path_decomposition, rank_decomposition, short_k, shorten, verify_short,
};
use mcast_core::generate::{gen_layered_instance, gen_random_instance, random_tree, single_tree_instance, LayeredParams, TreeShape};
use mcast_core::lowerbound::{build_lowerbound, check_lemmas, exhaustive_opt, markov_delay_check, BuildLimits, OptOutcome};
use mcast_core::math::{floor_log2, log_n};
use mcast_core::schedulers::{deterministic_schedule, max_frame_congestion, FrameOptions, FramePlan};
use mcast_core::sweep::{run_scheduler, RunOptions, SchedulerKind, SuiteSpec};
use mcast_core::{simulate, Graph, MulticastInstance, MulticastTree, NodeId, TreeId};

/// Optimum of the (C=2, D=2) lower-bound instance, recorded from the first
/// exhaustive run.
const OPT_C2_D2: u32 = 4;

type Runs = Vec<Result<Vec<(SchedulerKind, u32)>, String>>;
type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: u64) -> (bool, String) {
    (elapsed.as_secs() < limit_s, format!("{:.1}s (limit {limit_s}s)", elapsed.as_secs_f64()))
}

/// Criterion-1 suite: random instances plus small lower-bound instances.
fn validity_suite() -> &'static Vec<MulticastInstance> {
    static SUITE: OnceLock<Vec<MulticastInstance>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let lbs: Vec<MulticastInstance> = [(2, 1), (2, 2), (2, 3), (4, 2)]
            .into_iter()
            .map(|(c, d)| build_lowerbound(c, d, BuildLimits::default()).unwrap().instance)
            .collect();
        (0..1000u64)
            .into_par_iter()
            .map(|i| {
                if i % 10 == 9 {
                    return lbs[(i / 10) as usize % lbs.len()].clone();
                }
                let mut rng = ChaCha8Rng::seed_from_u64(i);
                let n = rng.gen_range(8..=1024u32);
                let trees = rng.gen_range(1..=24u32);
                let depth = rng.gen_range(1..=20u32.min(n - 1));
                if i % 2 == 0 {
                    gen_random_instance(n, trees, depth, i).unwrap()
                } else {
                    gen_layered_instance(LayeredParams::new(n, trees, depth, i)).unwrap()
                }
            })
            .collect()
    })
}

/// Lengths per instance and scheduler, or the first failure.
fn validity_runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        validity_suite()
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                SchedulerKind::ALL
                    .iter()
                    .map(|&k| {
                        run_scheduler(inst, k, i as u64, &RunOptions::default())
                            .map(|r| (k, r.length))
                            .map_err(|e| format!("instance {i}, {k}: {e}"))
                    })
                    .collect()
            })
            .collect()
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let runs = validity_runs();
    let failures: Vec<&String> = runs.iter().filter_map(|r| r.as_ref().err()).collect();
    let (fast, time) = within(start.elapsed(), 120);
    outcome(
        failures.is_empty() && fast,
        format!(
            "{} instances x {} schedulers, {} failures{}; {time}",
            runs.len(),
            SchedulerKind::ALL.len(),
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(" (first: {f})"))
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut greedy_bad = 0;
    let mut lower_bad = 0;
    let mut worst = 0.0f64;
    for (inst, runs) in validity_suite().iter().zip(validity_runs()) {
        let m = inst.metrics();
        let Ok(runs) = runs else { continue };
        for &(k, len) in runs {
            if len < m.congestion.max(m.dilation) {
                lower_bad += 1;
            }
            if k == SchedulerKind::Greedy {
                if len > m.congestion * m.dilation {
                    greedy_bad += 1;
                }
                worst = worst.max(f64::from(len) / f64::from((m.congestion * m.dilation).max(1)));
            }
        }
    }
    outcome(
        greedy_bad == 0 && lower_bad == 0,
        format!("greedy > C*D: {greedy_bad}, length < max(C,D): {lower_bad}; worst greedy/(C*D) = {worst:.3}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for ((c, d), edges) in [((2, 1), 1u64), ((2, 2), 6), ((2, 3), 100), ((4, 2), 38)] {
        let lb = build_lowerbound(c, d, BuildLimits::default()).unwrap();
        let report = check_lemmas(&lb, c, d);
        let ok = report.pass() && lb.stats.m_d == edges && lb.instance.graph().edge_count() as u64 == edges;
        pass &= ok;
        parts.push(format!("({c},{d}) m={} {}", lb.stats.m_d, if ok { "ok" } else { "bad" }));
    }
    let (fast, time) = within(start.elapsed(), 10);
    outcome(pass && fast, format!("{}; {time}", parts.join(", ")))
}

fn fig1_instance() -> MulticastInstance {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let trees = (0..2).map(|i| MulticastTree::path(TreeId(i), &[NodeId(0), NodeId(1)]).unwrap()).collect();
    MulticastInstance::new(g, trees).unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let lb = build_lowerbound(2, 2, BuildLimits::default()).unwrap();
    let opt = exhaustive_opt(&lb.instance, 8).unwrap();
    let fig = exhaustive_opt(&fig1_instance(), 8).unwrap();
    let ok = matches!(opt, OptOutcome::Optimal(v) if v >= 2 && v == OPT_C2_D2) && fig == OptOutcome::Optimal(2);
    let (fast, time) = within(start.elapsed(), 30);
    outcome(ok && fast, format!("(2,2) optimum {opt:?} (recorded {OPT_C2_D2}), congested edge {fig:?}; {time}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let lb = build_lowerbound(4, 3, BuildLimits::default()).unwrap();
    let build = start.elapsed();
    let inst = &lb.instance;
    let results: Vec<_> = SchedulerKind::ALL
        .iter()
        .map(|&k| {
            let r = run_scheduler(inst, k, 0, &RunOptions::default())
                .map(|r| (r.length, markov_delay_check(inst, &r.schedule).pass))
                .map_err(|e| e.to_string());
            (k, r)
        })
        .collect();
    let mut pass = build.as_secs() < 60;
    let mut parts = Vec::new();
    for (k, r) in &results {
        match r {
            Ok((len, markov)) => {
                pass &= *len >= 6 && *markov;
                parts.push(format!("{k}={len}{}", if *markov { "" } else { " markov-fail" }));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{k} error {e}"));
            }
        }
    }
    outcome(
        pass,
        format!(
            "{} edges built in {:.1}s; lengths {} (need >= 6)",
            inst.graph().edge_count(),
            build.as_secs_f64(),
            parts.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let failures: Vec<String> = (0..1000u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000_000 + i);
            let n = rng.gen_range(2..=4096u32);
            let tree = random_tree(n, TreeShape::ALL[i as usize % 4], i);
            let bound = floor_log2(u64::from(n)) + 1;
            let chunk = log_n(u64::from(n));
            let k = short_k(n);
            let heavy = heavy_path_decomposition(&tree);
            let (rank, ranks) = rank_decomposition(&tree);
            for (name, d) in [("heavy", &heavy), ("rank", &rank)] {
                let r = verify_short(d, &tree, chunk, k);
                if r.max_intersections > bound {
                    return Some(format!("tree {i}: {name} walk meets {} paths > {bound}", r.max_intersections));
                }
            }
            let short = shorten(&rank, chunk).unwrap();
            if !verify_short(&short, &tree, chunk, k).pass {
                return Some(format!("tree {i}: shortened decomposition fails"));
            }
            let sizes = tree.subtree_sizes();
            let r = compute_ranks(&tree);
            debug_assert_eq!(r, ranks);
            (0..tree.len())
                .find(|&l| u64::from(sizes[l]) < 1u64 << r.rank_local(l))
                .map(|l| format!("tree {i}: node {l} has rank {} but {} descendants", r.rank_local(l), sizes[l]))
        })
        .collect();
    let (fast, time) = within(start.elapsed(), 60);
    outcome(
        failures.is_empty() && fast,
        format!("1000 trees, {} failures{}; {time}", failures.len(), failures.first().map_or(String::new(), |f| format!(" ({f})"))),
    )
}

/// Criterion-7 suite: n = 1024 with C = 20·⌈log2 n⌉.
fn concentration_instance(seed: u64) -> MulticastInstance {
    gen_layered_instance(LayeredParams::new(1024, 200, 30, seed)).unwrap()
}

fn criterion_7() -> Outcome {
    let limit = 8 * 10;
    let maxima: Vec<u32> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = concentration_instance(seed);
            let plan = FramePlan::new(&inst, None).unwrap();
            max_frame_congestion(&inst, &plan.assign(plan.draw_offsets(seed)))
        })
        .collect();
    let good = maxima.iter().filter(|&&m| m <= limit).count();
    let worst = maxima.iter().max().copied().unwrap_or(0);
    outcome(good * 100 >= 99 * maxima.len(), format!("{good}/100 trials <= {limit}; worst {worst}"))
}

fn criterion_8_9_11_grid() -> Vec<(u32, u32)> {
    [256u32, 1024, 4096].iter().flat_map(|&n| [1u32, 4, 16].map(|m| (n, m))).collect()
}

fn grid_instance(n: u32, m: u32) -> MulticastInstance {
    let cell = SuiteSpec::polylog_grid(&[n], &[m])[0];
    gen_layered_instance(LayeredParams::new(n, cell.congestion, cell.depth, 0)).unwrap()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut ratios: Vec<(u32, u32, f64)> = Vec::new();
    let mut errors = Vec::new();
    for (n, m) in criterion_8_9_11_grid() {
        let inst = grid_instance(n, m);
        match run_scheduler(&inst, SchedulerKind::Frames, 0, &RunOptions::default()) {
            Ok(r) => {
                let mt = inst.metrics();
                let l = f64::from(log_n(u64::from(n)));
                ratios.push((n, m, f64::from(r.length) / (f64::from(mt.congestion + mt.dilation) + l * l)));
            }
            Err(e) => errors.push(format!("n={n} m={m}: {e}")),
        }
    }
    let bounded = ratios.iter().all(|r| r.2 <= 20.0);
    // Non-growth in n at fixed multiplier, with 10% slack for sampling noise.
    let mut growing = Vec::new();
    for m in [1u32, 4, 16] {
        let row: Vec<f64> = ratios.iter().filter(|r| r.1 == m).map(|r| r.2).collect();
        if row.windows(2).any(|w| w[1] > w[0] * 1.1) {
            growing.push(m);
        }
    }
    let (fast, time) = within(start.elapsed(), 600);
    let table: Vec<String> = ratios.iter().map(|(n, m, r)| format!("n{n}/m{m}={r:.2}")).collect();
    outcome(
        errors.is_empty() && bounded && growing.is_empty() && fast,
        format!("ratios {}; growing rows {growing:?}; errors {errors:?}; {time}", table.join(" ")),
    )
}

fn criterion_9() -> Outcome {
    let budget = 8 * 10;
    let results: Vec<Result<(u64, bool), String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = concentration_instance(seed);
            let a = deterministic_schedule(&inst, budget, 64, FrameOptions::default()).map_err(|e| e.to_string())?;
            let b = deterministic_schedule(&inst, budget, 64, FrameOptions::default()).map_err(|e| e.to_string())?;
            let same = a.seed == b.seed && a.frames.schedule.to_json() == b.frames.schedule.to_json();
            let valid = simulate(&inst, &a.frames.schedule);
            Ok((a.seed, same && valid.valid && valid.length.is_some()))
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let seeds: Vec<u64> = results.iter().filter_map(|r| r.as_ref().ok().map(|x| x.0)).collect();
    let identical = results.iter().all(|r| r.as_ref().is_ok_and(|x| x.1));
    let max_seed = seeds.iter().max().copied().unwrap_or(0);
    outcome(
        failures.is_empty() && identical && seeds.iter().all(|&s| s < 64),
        format!("{} of 100 found a seed < 64 (largest {max_seed}); identical reruns: {identical}", seeds.len()),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    // Single trees of assorted shapes and sizes: exact path-set equality.
    let singles: Vec<Result<f64, String>> = (0..60u64)
        .into_par_iter()
        .map(|i| {
            let n = [16u32, 100, 700, 2048][i as usize % 4];
            let tree = random_tree(n, TreeShape::ALL[(i / 4) as usize % 4], i);
            let inst = single_tree_instance(tree.clone(), n);
            let out = distributed_rank_decomposition(&inst, &CongestOptions { seed: i, ..Default::default() })
                .map_err(|e| e.to_string())?;
            let central = shorten(&rank_decomposition(&tree).0, out.chunk_len).unwrap();
            if out.decompositions[0].path_set() != central.path_set() {
                return Err(format!("single tree {i}: path sets differ"));
            }
            if !message_size_audit(&out.transcript).pass {
                return Err(format!("single tree {i}: payload over budget"));
            }
            let m = inst.metrics();
            Ok(f64::from(out.rounds.total) / decomposition_round_shape(m.congestion, m.dilation, n))
        })
        .collect();
    // Multi-tree instances: shortness, equality and audit.
    let multis: Vec<Result<f64, String>> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(2_000_000 + i);
            let n = rng.gen_range(32..=1024u32);
            let c = rng.gen_range(2..=120u32);
            let d = rng.gen_range(2..=60u32.min(n - 1));
            let inst = if i % 2 == 0 {
                gen_layered_instance(LayeredParams::new(n, c, d, i)).unwrap()
            } else {
                gen_random_instance(n, c.min(40), d, i).unwrap()
            };
            let out = distributed_rank_decomposition(&inst, &CongestOptions { seed: i, ..Default::default() })
                .map_err(|e| e.to_string())?;
            let k = short_k(n);
            for (t, tree) in inst.trees().iter().enumerate() {
                if !verify_short(&out.decompositions[t], tree, out.chunk_len, k).pass {
                    return Err(format!("instance {i} tree {t}: not short"));
                }
                if out.decompositions[t].path_set() != shorten(&rank_decomposition(tree).0, out.chunk_len).unwrap().path_set() {
                    return Err(format!("instance {i} tree {t}: differs from centralized"));
                }
            }
            if !message_size_audit(&out.transcript).pass {
                return Err(format!("instance {i}: payload over budget"));
            }
            let m = inst.metrics();
            Ok(f64::from(out.rounds.total) / decomposition_round_shape(m.congestion, m.dilation, n))
        })
        .collect();
    let all: Vec<&Result<f64, String>> = singles.iter().chain(&multis).collect();
    let failures: Vec<&String> = all.iter().filter_map(|r| r.as_ref().err()).collect();
    let c = all.iter().filter_map(|r| r.as_ref().ok()).copied().fold(0.0, f64::max);
    let (fast, time) = within(start.elapsed(), 300);
    outcome(
        failures.is_empty() && c <= 64.0 && fast,
        format!(
            "60 single + 100 multi-tree runs, {} failures{}; fitted c = {c:.3} (limit 64); {time}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(" ({f})"))
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for (n, m) in criterion_8_9_11_grid() {
        let inst = grid_instance(n, m);
        let o = CongestOptions::default();
        match distributed_multicast(&inst, &o, true) {
            Ok(out) => {
                let r = simulate(&inst, &out.schedule);
                if !r.valid || r.length.is_none() {
                    problems.push(format!("n={n} m={m}: not delivered"));
                }
                let mt = inst.metrics();
                let shape = f64::from(mt.congestion + mt.dilation + multicast_range_len(n, o.epsilon));
                worst = worst.max(f64::from(out.rounds) / shape);
            }
            Err(e) => problems.push(format!("n={n} m={m}: {e}")),
        }
    }
    outcome(problems.is_empty() && worst <= 64.0, format!("fitted c = {worst:.3} (limit 64); problems {problems:?}"))
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; a name filter selects criteria.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [Criterion; 11] = [
        (1, "validity of every scheduler", criterion_1),
        (2, "greedy bound and trivial lower bound", criterion_2),
        (3, "lower-bound structure", criterion_3),
        (4, "tiny-instance optimum", criterion_4),
        (5, "lower bound at scale", criterion_5),
        (6, "decomposition bounds", criterion_6),
        (7, "frame concentration", criterion_7),
        (8, "additive polylog tracking", criterion_8),
        (9, "derandomization", criterion_9),
        (10, "CONGEST decomposition", criterion_10),
        (11, "distributed multicast", criterion_11),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let label = format!("criterion_{id}");
        if filter.as_ref().is_some_and(|f| !label.contains(f.as_str()) && !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
