//! Degree distributions over `{1, …, k}` and their inverse-CDF sampler.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::math::{ln_choose, ln_factorials};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    #[error("support size k must be at least {min}, got {k}")]
    SupportTooSmall { k: usize, min: usize },
    #[error("c0 must be positive, got {0}")]
    BadC0(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("spike index k/R = {ratio} rounds below 1 (k={k})")]
    SpikeBelowOne { k: usize, ratio: f64 },
    #[error("spike mass R ln(R/delta)/k is negative (R={r}, delta={delta})")]
    NegativeSpike { r: f64, delta: f64 },
    #[error("probabilities must be finite and non-negative with positive total")]
    BadWeights,
}

/// A probability vector over degrees `1..=k`, with its CDF for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Robust Soliton defaults used when a configuration leaves them out.
pub const DEFAULT_C0: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.5;

impl DegreeDistribution {
    /// `Ω(1) = 1/k`, `Ω(d) = 1/(d(d-1))`.
    pub fn ideal_soliton(k: usize) -> Result<Self, SolitonError> {
        if k == 0 {
            return Err(SolitonError::SupportTooSmall { k, min: 1 });
        }
        let probs = (1..=k)
            .map(|d| {
                if d == 1 {
                    1.0 / k as f64
                } else {
                    1.0 / (d as f64 * (d as f64 - 1.0))
                }
            })
            .collect();
        Self::from_weights(probs)
    }

    /// Ideal Soliton plus the `τ` correction, renormalized.
    ///
    /// `R = c0 · ln(k/δ) · √k`. The spike sits at `round(k/R)`, clamped to `k`
    /// from above. Parameters whose spike rounds below 1, or whose spike mass
    /// is negative (`R < δ`), are rejected.
    pub fn robust_soliton(k: usize, c0: f64, delta: f64) -> Result<Self, SolitonError> {
        if k < 2 {
            return Err(SolitonError::SupportTooSmall { k, min: 2 });
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(SolitonError::BadC0(c0));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SolitonError::BadDelta(delta));
        }
        let kf = k as f64;
        let r = c0 * libm::log(kf / delta) * libm::sqrt(kf);
        let ratio = kf / r;
        let rounded = libm::round(ratio);
        if rounded < 1.0 {
            return Err(SolitonError::SpikeBelowOne { k, ratio });
        }
        let pivot = (rounded as usize).min(k);
        let spike = r * libm::log(r / delta) / kf;
        if spike < 0.0 {
            return Err(SolitonError::NegativeSpike { r, delta });
        }
        let ideal = Self::ideal_soliton(k)?;
        let weights = (1..=k)
            .map(|d| {
                let tau = if d < pivot {
                    r / (d as f64 * kf)
                } else if d == pivot {
                    spike
                } else {
                    0.0
                };
                tau + ideal.prob(d)
            })
            .collect();
        Self::from_weights(weights)
    }

    /// Normalizes arbitrary non-negative weights for degrees `1..=weights.len()`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, SolitonError> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SolitonError::BadWeights);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(SolitonError::BadWeights);
        }
        let probs: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(DegreeDistribution { probs, cdf })
    }

    /// Largest degree in the support.
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// `Ω(d)` for `d` in `1..=k`; zero outside the support.
    pub fn prob(&self, d: usize) -> f64 {
        if d == 0 || d > self.k() {
            0.0
        } else {
            self.probs[d - 1]
        }
    }

    /// Probabilities for degrees `1..=k` in order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `Σ d Ω(d)`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Inverse-CDF draw of a degree in `1..=k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.k() - 1) + 1
    }

    /// Distribution of the number of accepted packets when a node that drew
    /// `d ~ Ω` accepts each of `k` distinct sources independently with
    /// probability `d/k`:
    ///
    /// `Ω′(i) = Σ_d C(k,i) (d/k)^i (1 − d/k)^(k−i) Ω(d)`, for `i = 0..=k`.
    ///
    /// Degrees above `k` accept with probability one.
    pub fn thinned(&self, k: usize) -> Vec<f64> {
        let lnf = ln_factorials(k);
        let mut out = alloc::vec![0.0; k + 1];
        for (idx, &w) in self.probs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let d = idx + 1;
            if k == 0 {
                out[0] += w;
                continue;
            }
            if d >= k {
                out[k] += w;
                continue;
            }
            let p = d as f64 / k as f64;
            let (lp, lq) = (libm::log(p), libm::log1p(-p));
            for (i, slot) in out.iter_mut().enumerate() {
                let ln_term = ln_choose(&lnf, k, i) + i as f64 * lp + (k - i) as f64 * lq;
                *slot += w * libm::exp(ln_term);
            }
        }
        out
    }
}
