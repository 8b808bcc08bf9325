//! Raptor-code based distributed storage: a distributed random pre-code
//! followed by LT-code storage over the pre-code outputs.
//!
//! Each source launches `b ~ P_LDPC` copies of its packet. Every non-source
//! node volunteers as a parity node with probability `(m−k)/(n−k)`; parity
//! nodes and the (systematic) source nodes are the pre-code outputs. Output
//! `w` draws `a(w) ~ Binomial(k, E[b]/m)` and absorbs the first `a(w)` copies
//! of distinct sources that reach it after walking at least `C3 · n · ln n`
//! hops. The outputs then act as the sources of an LTCDS run.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::graph::Network;
use crate::ltcds::{run_ltcds, LtcdsConfig, LtcdsOutcome};
use crate::math::hop_cap;
use crate::rng::{self, derive_seed, Purpose};
use crate::walk::{Packet, SimClock, Walkers};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RcdsError {
    #[error("pre-code output count m={m} must be at least k={k}")]
    TooFewOutputs { m: usize, k: usize },
    #[error("pre-code output count m={m} exceeds node count n={n}")]
    TooManyOutputs { m: usize, n: usize },
    #[error("copy-count probabilities must be finite, non-negative and sum to a positive value")]
    BadCopyWeights,
    #[error("source node {0} listed twice")]
    DuplicateSource(usize),
}

/// `P_LDPC`: distribution of the number of copies `b` a source launches,
/// indexed from `b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyDistribution {
    probs: Vec<f64>,
}

impl CopyDistribution {
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, RcdsError> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(RcdsError::BadCopyWeights);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(RcdsError::BadCopyWeights);
        }
        Ok(CopyDistribution {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Uniform on `lo..=hi`.
    pub fn uniform(lo: usize, hi: usize) -> Self {
        let mut w = vec![0.0; hi + 1];
        w[lo..=hi].iter_mut().for_each(|x| *x = 1.0);
        Self::from_weights(w).expect("non-empty uniform range")
    }

    /// Always `b` copies.
    pub fn constant(b: usize) -> Self {
        Self::uniform(b, b)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `E[b]`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(b, p)| b as f64 * p)
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u: f64 = rng.gen();
        for (b, &p) in self.probs.iter().enumerate() {
            if u < p {
                return b;
            }
            u -= p;
        }
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

impl Default for CopyDistribution {
    fn default() -> Self {
        Self::uniform(1, 3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeConfig {
    pub m: usize,
    pub copies: CopyDistribution,
    pub c3: f64,
    /// Copies that have walked `drop_factor · C3 · n · ln n` hops without
    /// being absorbed are dropped.
    pub drop_factor: f64,
    /// Replaces the binomial draw of `a(w)` with a fixed value.
    pub target_override: Option<usize>,
}

impl PrecodeConfig {
    /// Defaults for `k` sources: `m = ⌈1.1 k⌉`, `b` uniform on `{1,2,3}`, `C3 = 3`.
    pub fn for_sources(k: usize) -> Self {
        PrecodeConfig {
            m: libm::ceil(1.1 * k as f64) as usize,
            copies: CopyDistribution::default(),
            c3: 3.0,
            drop_factor: 10.0,
            target_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrecodeNodeState {
    pub is_output: bool,
    /// Source index held by a systematic output.
    pub systematic: Option<u32>,
    pub a_target: usize,
    pub accepted: BTreeSet<u32>,
}

impl PrecodeNodeState {
    /// Sources XORed into this output.
    pub fn stored(&self) -> BTreeSet<u32> {
        let mut s = self.accepted.clone();
        s.extend(self.systematic);
        s
    }

    pub fn is_full(&self) -> bool {
        self.accepted.len() >= self.a_target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Absorption {
    pub source: u32,
    pub copy: u32,
    pub node: u32,
}

#[derive(Debug, Clone)]
pub struct PrecodeOutcome {
    pub nodes: Vec<PrecodeNodeState>,
    /// Node holding pre-code output `j`: systematic outputs first, in source
    /// order, then parity nodes in node order.
    pub outputs: Vec<usize>,
    /// Pre-code output `j` → sorted source indices it XORs.
    pub precode_map: Vec<Vec<u32>>,
    pub launched: u64,
    pub absorptions: Vec<Absorption>,
    pub dropped: u64,
    /// Outputs that ended with fewer than `a(w)` absorbed copies.
    pub underfilled: usize,
    pub clock: SimClock,
}

fn check_sources(n: usize, sources: &[usize]) -> Result<(), RcdsError> {
    let mut seen = vec![false; n];
    for &s in sources {
        if core::mem::replace(&mut seen[s], true) {
            return Err(RcdsError::DuplicateSource(s));
        }
    }
    Ok(())
}

/// Runs the distributed pre-code until every copy is absorbed or dropped.
pub fn run_precoding(
    net: &Network,
    sources: &[usize],
    cfg: &PrecodeConfig,
    seed: u64,
) -> Result<PrecodeOutcome, RcdsError> {
    let n = net.len();
    let k = sources.len();
    if cfg.m < k {
        return Err(RcdsError::TooFewOutputs { m: cfg.m, k });
    }
    if cfg.m > n {
        return Err(RcdsError::TooManyOutputs { m: cfg.m, n });
    }
    check_sources(n, sources)?;

    let mut rngs = rng::node_streams(seed, Purpose::Precode, n);
    let mut nodes = vec![PrecodeNodeState::default(); n];
    for (i, &s) in sources.iter().enumerate() {
        nodes[s].is_output = true;
        nodes[s].systematic = Some(i as u32);
    }
    let parity_prob = if n > k {
        (cfg.m - k) as f64 / (n - k) as f64
    } else {
        0.0
    };
    let fill_prob = if cfg.m == 0 {
        0.0
    } else {
        (cfg.copies.mean() / cfg.m as f64).min(1.0)
    };
    for (node, rng) in nodes.iter_mut().zip(rngs.iter_mut()) {
        if node.systematic.is_none() {
            node.is_output = rng.gen::<f64>() < parity_prob;
        }
        if node.is_output {
            node.a_target = match cfg.target_override {
                Some(a) => a,
                None => (0..k).filter(|_| rng.gen::<f64>() < fill_prob).count(),
            };
        }
    }

    let mut walkers = Walkers::new(n, derive_seed(seed, Purpose::Precode as u64));
    let mut launched = 0u64;
    for (i, &s) in sources.iter().enumerate() {
        let b = cfg.copies.sample(&mut rngs[s]);
        for c in 0..b {
            walkers.inject(s, Packet::new(i as u32, c as u32));
        }
        launched += b as u64;
    }

    let threshold = hop_cap(cfg.c3, n as f64);
    let horizon = libm::ceil(cfg.drop_factor * threshold as f64) as u64;
    let mut absorptions = Vec::new();
    let mut dropped = 0u64;
    walkers.run_until_idle(net, u64::MAX, |w, pkt, _| {
        let node = &mut nodes[w];
        if node.is_output
            && pkt.hops >= threshold
            && !node.is_full()
            && node.systematic != Some(pkt.source)
            && node.accepted.insert(pkt.source)
        {
            absorptions.push(Absorption {
                source: pkt.source,
                copy: pkt.copy,
                node: w as u32,
            });
            return false;
        }
        if pkt.hops >= horizon {
            dropped += 1;
            return false;
        }
        true
    });

    let mut outputs: Vec<usize> = sources.to_vec();
    outputs.extend((0..n).filter(|&u| nodes[u].is_output && nodes[u].systematic.is_none()));
    let precode_map = outputs
        .iter()
        .map(|&u| nodes[u].stored().into_iter().collect())
        .collect();
    let underfilled = nodes.iter().filter(|s| s.is_output && !s.is_full()).count();
    Ok(PrecodeOutcome {
        nodes,
        outputs,
        precode_map,
        launched,
        absorptions,
        dropped,
        underfilled,
        clock: walkers.clock(),
    })
}

#[derive(Debug, Clone)]
pub struct RcdsConfig {
    pub precode: PrecodeConfig,
    pub inner: LtcdsConfig,
    /// Hand every node the true `(n, number of pre-code outputs)` for the
    /// inner LT stage. When false, nodes infer them.
    pub inner_known: bool,
}

#[derive(Debug, Clone)]
pub struct RcdsOutcome {
    pub precode: PrecodeOutcome,
    /// Inner storage; stored IDs are pre-code output indices.
    pub inner: LtcdsOutcome,
}

/// Pre-code, then LTCDS with the pre-code outputs as sources.
pub fn run_rcds(
    net: &Network,
    sources: &[usize],
    cfg: &RcdsConfig,
    seed: u64,
) -> Result<RcdsOutcome, RcdsError> {
    let precode = run_precoding(net, sources, &cfg.precode, seed)?;
    let mut inner_cfg = cfg.inner;
    inner_cfg.oracle = cfg
        .inner_known
        .then_some((net.len(), precode.outputs.len()));
    let inner = run_ltcds(net, &precode.outputs, &inner_cfg, seed);
    Ok(RcdsOutcome { precode, inner })
}
