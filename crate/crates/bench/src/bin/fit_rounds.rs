//! Fits `rounds ≈ c·shape + c0` for the distributed decomposition, where
//! `shape = (C + D)(1 + log2 min(C, D) / log2 log2 n)`, and prints one JSON
//! line per sample followed by the fit.

use mcast_bench::{decomposition_sample, fit_line, polylog_instance};

fn main() {
    let mut samples = Vec::new();
    for n in [64u32, 256, 1024] {
        for m in [1u32, 2, 4] {
            let inst = polylog_instance(n, m, 0);
            let s = decomposition_sample(&inst, 0);
            println!(
                "{{\"n\":{},\"congestion\":{},\"dilation\":{},\"shape\":{:.1},\"rounds\":{}}}",
                s.n, s.congestion, s.dilation, s.shape, s.rounds
            );
            samples.push(s);
        }
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.shape, f64::from(s.rounds))).collect();
    let (c, c0) = fit_line(&pts);
    let worst = samples.iter().map(|s| f64::from(s.rounds) / s.shape).fold(0.0, f64::max);
    println!("{{\"fit_c\":{c:.3},\"fit_c0\":{c0:.1},\"max_ratio\":{worst:.3}}}");
}
