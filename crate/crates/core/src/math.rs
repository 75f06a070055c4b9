//! Integer logarithms and the derived parameters used across schedulers.

/// `⌈log2 n⌉`, with `ceil_log2(0) == ceil_log2(1) == 0`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// `⌊log2 n⌋`; `n` must be positive.
pub fn floor_log2(n: u64) -> u32 {
    assert!(n > 0, "floor_log2(0) is undefined");
    63 - n.leading_zeros()
}

/// Number of bits needed to write any value in `0..=max_value` (at least 1).
pub fn bits_for(max_value: u64) -> u32 {
    ceil_log2(max_value.saturating_add(1)).max(1)
}

/// `⌈log2 n⌉`, clamped to at least 1 so it can serve as a chunk length.
pub fn log_n(n: u64) -> u32 {
    ceil_log2(n).max(1)
}

/// `⌈(⌈log2 n⌉)^exponent⌉`, clamped to at least 1.
pub fn log_power(n: u64, exponent: f64) -> u32 {
    let base = f64::from(log_n(n));
    let value = base.powf(exponent);
    // Guard against 12.000000001-style float noise before taking the ceiling.
    let rounded = value.round();
    let v = if (value - rounded).abs() < 1e-9 { rounded } else { value.ceil() };
    (v as u32).max(1)
}

/// `⌈a / b⌉` for positive `b`.
pub fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}
