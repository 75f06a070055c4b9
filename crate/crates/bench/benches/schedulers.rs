use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mcast_bench::polylog_instance;
use mcast_core::congest::{distributed_multicast, distributed_rank_decomposition, CongestOptions};
use mcast_core::decomposition::{rank_decomposition, shorten};
use mcast_core::lowerbound::{build_lowerbound, BuildLimits};
use mcast_core::schedulers::{deterministic_schedule, frame_multicast_schedule, greedy_schedule, FrameOptions};
use mcast_core::simulate;

fn schedulers(c: &mut Criterion) {
    let inst = polylog_instance(256, 1, 0);
    let mut g = c.benchmark_group("schedulers/n256");
    g.sample_size(10);
    g.bench_function("greedy", |b| b.iter(|| greedy_schedule(black_box(&inst))));
    g.bench_function("frames", |b| b.iter(|| frame_multicast_schedule(black_box(&inst), 0, FrameOptions::default())));
    g.bench_function("deterministic", |b| {
        b.iter(|| deterministic_schedule(black_box(&inst), 64, 1024, FrameOptions::default()))
    });
    let s = greedy_schedule(&inst);
    g.bench_function("simulate", |b| b.iter(|| simulate(black_box(&inst), black_box(&s))));
    g.finish();
}

fn decompositions(c: &mut Criterion) {
    let inst = polylog_instance(1024, 1, 0);
    let mut g = c.benchmark_group("decomposition/n1024");
    g.sample_size(10);
    g.bench_function("rank+shorten", |b| {
        b.iter(|| {
            for t in inst.trees() {
                black_box(shorten(&rank_decomposition(t).0, 10).unwrap());
            }
        })
    });
    g.finish();
}

fn congest(c: &mut Criterion) {
    let inst = polylog_instance(256, 1, 0);
    let o = CongestOptions::default();
    let mut g = c.benchmark_group("congest/n256");
    g.sample_size(10);
    g.bench_function("rank decomposition", |b| b.iter(|| distributed_rank_decomposition(black_box(&inst), &o)));
    g.bench_function("multicast with depths", |b| b.iter(|| distributed_multicast(black_box(&inst), &o, true)));
    g.finish();
}

fn lowerbound(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowerbound");
    g.sample_size(10);
    g.bench_function("build C=2 D=3", |b| b.iter(|| build_lowerbound(2, 3, BuildLimits::default())));
    g.finish();
}

criterion_group!(benches, schedulers, decompositions, congest, lowerbound);
criterion_main!(benches);
