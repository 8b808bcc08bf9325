//! Small numeric helpers that `core` lacks.

use alloc::vec::Vec;

/// `ln(i!)` for `i = 0..=k`, built by cumulative sums.
pub fn ln_factorials(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=k {
        acc += libm::log(i as f64);
        out.push(acc);
    }
    out
}

/// Natural log of the binomial coefficient from a precomputed table.
pub fn ln_choose(lnf: &[f64], n: usize, r: usize) -> f64 {
    lnf[n] - lnf[r] - lnf[n - r]
}

/// `x ln x`, the shape of every hop cap.
pub fn n_log_n(x: f64) -> f64 {
    x * libm::log(x)
}

/// `ceil(c · x · ln x)`, clamped at zero.
pub fn hop_cap(c: f64, x: f64) -> u64 {
    let v = libm::ceil(c * n_log_n(x));
    if v <= 0.0 || v.is_nan() {
        0
    } else {
        v as u64
    }
}
