//! Benchmark fixtures and the least-squares fit used to report round-count
//! constants.

use mcast_core::congest::{decomposition_round_shape, distributed_rank_decomposition, CongestOptions};
use mcast_core::generate::{gen_layered_instance, LayeredParams};
use mcast_core::math::log_n;
use mcast_core::MulticastInstance;

/// Layered instance with `C = D = multiplier·⌈log2 n⌉²`, depth clamped to
/// `n - 1`.
pub fn polylog_instance(n: u32, multiplier: u32, seed: u64) -> MulticastInstance {
    let l = log_n(u64::from(n));
    let c = multiplier * l * l;
    gen_layered_instance(LayeredParams::new(n, c, c.min(n - 1), seed)).expect("valid grid cell")
}

/// Least-squares line `y ≈ c·x + c0`. Returns `(c, c0)`.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (my / mx.max(f64::MIN_POSITIVE), 0.0);
    }
    let c = sxy / sxx;
    (c, my - c * mx)
}

/// One decomposition run: the bound shape and the realized rounds.
#[derive(Clone, Copy, Debug)]
pub struct RoundSample {
    pub n: u32,
    pub congestion: u32,
    pub dilation: u32,
    pub shape: f64,
    pub rounds: u32,
}

/// Runs the distributed decomposition and records its rounds.
pub fn decomposition_sample(instance: &MulticastInstance, seed: u64) -> RoundSample {
    let m = instance.metrics();
    let out = distributed_rank_decomposition(instance, &CongestOptions { seed, ..Default::default() })
        .expect("decomposition runs");
    RoundSample {
        n: m.node_count,
        congestion: m.congestion,
        dilation: m.dilation,
        shape: decomposition_round_shape(m.congestion, m.dilation, m.node_count),
        rounds: out.rounds.total,
    }
}
