//! LT-code based distributed storage.
//!
//! Each source injects one packet that random-walks the network. A node
//! first infers `(n̂, k̂)` from the walks ([`crate::estimate`]), or is handed
//! the true values in oracle mode. It then draws a code degree `d ~ Ω` over
//! `{1..k̂}` and, the first time each distinct source passes, XORs it into its
//! storage with probability `d/k̂`. A packet retires at the first node whose
//! hop cap `⌈C1 · n̂ · ln n̂⌉` it has reached.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use crate::estimate::{Estimates, InferenceState};
use crate::graph::Network;
use crate::math::hop_cap;
use crate::rng::{self, mix64, Purpose, SimRng};
use crate::soliton::{DegreeDistribution, SolitonError};
use crate::walk::{Packet, SimClock, TraceEvent, Walkers};

/// Which degree distribution a node builds over its support `{1..k̂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeFamily {
    Ideal,
    Robust { c0: f64, delta: f64 },
}

impl DegreeFamily {
    pub fn build(&self, k: usize) -> Result<DegreeDistribution, SolitonError> {
        match *self {
            DegreeFamily::Ideal => DegreeDistribution::ideal_soliton(k),
            DegreeFamily::Robust { c0, delta } => DegreeDistribution::robust_soliton(k, c0, delta),
        }
    }

    /// As [`DegreeFamily::build`], but supports where the Robust Soliton is
    /// undefined (tiny `k̂`) fall back to the Ideal Soliton.
    pub fn build_for_node(&self, k: usize) -> DegreeDistribution {
        let k = k.max(1);
        self.build(k)
            .or_else(|_| DegreeDistribution::ideal_soliton(k))
            .expect("ideal soliton is defined for k >= 1")
    }
}

/// Payload of a source in payload-tracking mode.
pub fn source_payload(seed: u64, source: u32) -> u64 {
    mix64(seed ^ ((source as u64) << 32 | 0x5EED))
}

/// Storage of one node during and after encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageState {
    degree: usize,
    n_hat: f64,
    k_hat: usize,
    hop_cap: u64,
    accept_prob: f64,
    stored: BTreeSet<u32>,
    decided: BTreeSet<u32>,
    payload: Option<(u64, u64)>,
}

impl StorageState {
    /// Builds `Ω` over `{1..k̂}`, draws the code degree and fixes the hop cap.
    pub fn begin<R: Rng + ?Sized>(
        n_hat: f64,
        k_hat: usize,
        family: DegreeFamily,
        c1: f64,
        rng: &mut R,
    ) -> Self {
        let k_hat = k_hat.max(1);
        let dist = family.build_for_node(k_hat);
        let degree = dist.sample(rng);
        StorageState {
            degree,
            n_hat,
            k_hat,
            hop_cap: hop_cap(c1, n_hat),
            accept_prob: (degree as f64 / k_hat as f64).min(1.0),
            stored: BTreeSet::new(),
            decided: BTreeSet::new(),
            payload: None,
        }
    }

    /// Also maintain a 64-bit XOR accumulator of source payloads.
    pub fn with_payloads(mut self, seed: u64) -> Self {
        self.payload = Some((seed, 0));
        self
    }

    /// Handles an arriving packet; returns whether it keeps walking.
    ///
    /// Packets whose hop count has reached the cap retire. Otherwise the first
    /// arrival of each distinct source gets one acceptance coin.
    pub fn on_packet<R: Rng + ?Sized>(&mut self, pkt: &Packet, rng: &mut R) -> bool {
        self.offer(pkt.source, pkt.hops, rng)
    }

    /// As [`StorageState::on_packet`] with the packet's age given explicitly.
    pub fn offer<R: Rng + ?Sized>(&mut self, source: u32, age: u64, rng: &mut R) -> bool {
        if age >= self.hop_cap {
            return false;
        }
        self.consider(source, rng);
        true
    }

    /// The acceptance coin alone, with no retirement check.
    pub fn consider<R: Rng + ?Sized>(&mut self, source: u32, rng: &mut R) {
        if self.decided.insert(source) && rng.gen::<f64>() < self.accept_prob {
            self.stored.insert(source);
            if let Some((seed, acc)) = self.payload.as_mut() {
                *acc ^= source_payload(*seed, source);
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_hat(&self) -> f64 {
        self.n_hat
    }

    pub fn k_hat(&self) -> usize {
        self.k_hat
    }

    pub fn hop_cap(&self) -> u64 {
        self.hop_cap
    }

    pub fn accept_prob(&self) -> f64 {
        self.accept_prob
    }

    /// Sources XORed into this node's storage.
    pub fn stored(&self) -> &BTreeSet<u32> {
        &self.stored
    }

    /// Sources that have already had their acceptance coin.
    pub fn decided(&self) -> &BTreeSet<u32> {
        &self.decided
    }

    /// The payload accumulator, when payload tracking is on.
    pub fn payload(&self) -> Option<u64> {
        self.payload.map(|(_, acc)| acc)
    }
}

/// Which hops count toward a packet's retirement cap when nodes infer their
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopBudget {
    /// Every hop since launch counts, including those made while nodes were
    /// still inferring.
    Cumulative,
    /// Packets are not retired until every node has finished inference; the
    /// cap then applies to hops made after that point.
    AfterInference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtcdsConfig {
    pub c1: f64,
    pub c2: u32,
    pub family: DegreeFamily,
    /// True `(n, k)` handed to every node, skipping inference.
    pub oracle: Option<(usize, usize)>,
    pub hop_budget: HopBudget,
    pub payloads: bool,
    pub trace: bool,
    /// Safety stop for the round loop.
    pub max_rounds: u64,
}

impl Default for LtcdsConfig {
    fn default() -> Self {
        LtcdsConfig {
            c1: 3.0,
            c2: 50,
            family: DegreeFamily::Ideal,
            oracle: None,
            hop_budget: HopBudget::AfterInference,
            payloads: false,
            trace: false,
            max_rounds: 1 << 36,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeOutcome {
    pub estimates: Option<Estimates>,
    /// False when the walks all retired before this node finished inference.
    pub inference_complete: bool,
    pub storage: Option<StorageState>,
}

impl NodeOutcome {
    pub fn stored(&self) -> Vec<u32> {
        self.storage
            .as_ref()
            .map(|s| s.stored().iter().copied().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
pub struct LtcdsOutcome {
    pub nodes: Vec<NodeOutcome>,
    pub clock: SimClock,
    pub max_queue_len: usize,
    /// Nodes that fell back to estimates from an unfinished record.
    pub incomplete_inference: usize,
    /// Every packet, after retirement.
    pub packets: Vec<Packet>,
    /// False when the round limit stopped the run.
    pub finished: bool,
    pub trace: Vec<TraceEvent>,
}

impl LtcdsOutcome {
    /// Per-node stored source sets, empty for nodes that store nothing.
    pub fn stored_sets(&self) -> Vec<Vec<u32>> {
        self.nodes.iter().map(NodeOutcome::stored).collect()
    }
}

enum Phase {
    Inferring(InferenceState),
    Encoding(Option<Estimates>, StorageState),
}

/// Runs the full algorithm: the source at `sources[i]` launches packet `i`;
/// the run ends when every packet has retired.
pub fn run_ltcds(net: &Network, sources: &[usize], cfg: &LtcdsConfig, seed: u64) -> LtcdsOutcome {
    let n = net.len();
    let mut coding = rng::node_streams(seed, Purpose::Coding, n);
    let start = |rng: &mut SimRng, n_hat: f64, k_hat: usize| {
        let s = StorageState::begin(n_hat, k_hat, cfg.family, cfg.c1, rng);
        if cfg.payloads {
            s.with_payloads(seed)
        } else {
            s
        }
    };
    let mut phases: Vec<Phase> = coding
        .iter_mut()
        .map(|rng| match cfg.oracle {
            Some((n_true, k_true)) => Phase::Encoding(None, start(rng, n_true as f64, k_true)),
            None => Phase::Inferring(InferenceState::new(cfg.c2)),
        })
        .collect();

    let mut walkers = Walkers::new(n, seed);
    if cfg.trace {
        walkers.enable_trace();
    }
    for (i, &s) in sources.iter().enumerate() {
        walkers.inject(s, Packet::new(i as u32, 0));
    }
    let mut pending = phases
        .iter()
        .filter(|p| matches!(p, Phase::Inferring(_)))
        .count();
    let defer = cfg.hop_budget == HopBudget::AfterInference && pending > 0;
    // Hop count of each packet when the inference phase closed.
    let mut offsets: Option<Vec<u64>> = (!defer).then(|| alloc::vec![0; sources.len()]);
    let mut finished = true;
    while !walkers.is_idle() {
        if walkers.clock().round >= cfg.max_rounds {
            finished = false;
            break;
        }
        if offsets.is_none() && pending == 0 {
            let mut o = alloc::vec![0; sources.len()];
            for (_, p) in walkers.live_packets() {
                o[p.source as usize] = p.hops;
            }
            offsets = Some(o);
        }
        walkers.step_round(net, |u, pkt, round| {
            let rng = &mut coding[u];
            match &mut phases[u] {
                Phase::Encoding(_, storage) => match &offsets {
                    Some(o) => storage.offer(pkt.source, pkt.hops - o[pkt.source as usize], rng),
                    None => {
                        storage.consider(pkt.source, rng);
                        true
                    }
                },
                Phase::Inferring(inf) => {
                    if inf.record_visit(pkt.source, round) && inf.is_done() {
                        pending -= 1;
                        // c2 == 1 finishes with no gap to average; such nodes never encode.
                        if let Ok(est) = inf.finalize() {
                            let storage = start(rng, est.n_hat, est.k_hat);
                            phases[u] = Phase::Encoding(Some(est), storage);
                        }
                    }
                    true
                }
            }
        });
    }

    let mut incomplete = 0;
    let nodes = phases
        .into_iter()
        .zip(coding.iter_mut())
        .map(|(phase, rng)| match phase {
            Phase::Encoding(estimates, storage) => NodeOutcome {
                estimates,
                inference_complete: true,
                storage: Some(storage),
            },
            Phase::Inferring(inf) => {
                incomplete += 1;
                let estimates = inf.finalize().ok();
                NodeOutcome {
                    storage: estimates.map(|e| start(rng, e.n_hat, e.k_hat)),
                    estimates,
                    inference_complete: false,
                }
            }
        })
        .collect();

    let mut packets: Vec<Packet> = walkers.retired().to_vec();
    packets.extend(walkers.live_packets().map(|(_, p)| *p));
    LtcdsOutcome {
        nodes,
        clock: walkers.clock(),
        max_queue_len: walkers.max_queue_len(),
        incomplete_inference: incomplete,
        packets,
        finished,
        trace: walkers.take_trace(),
    }
}

#[derive(Debug, Clone)]
pub struct InferenceOutcome {
    /// Per node; `None` when no source visited the node twice.
    pub estimates: Vec<Option<Estimates>>,
    pub complete: Vec<bool>,
    pub clock: SimClock,
}

/// Inference only: packets walk without retiring until every node has
/// finished recording (or the round limit hits).
pub fn run_inference(
    net: &Network,
    sources: &[usize],
    c2: u32,
    seed: u64,
    max_rounds: u64,
) -> InferenceOutcome {
    let n = net.len();
    let mut states: Vec<InferenceState> = (0..n).map(|_| InferenceState::new(c2)).collect();
    let mut pending = n;
    let mut walkers = Walkers::new(n, seed);
    for (i, &s) in sources.iter().enumerate() {
        walkers.inject(s, Packet::new(i as u32, 0));
    }
    while pending > 0 && walkers.clock().round < max_rounds && !walkers.is_idle() {
        walkers.step_round(net, |u, pkt, round| {
            let st = &mut states[u];
            if st.record_visit(pkt.source, round) && st.is_done() {
                pending -= 1;
            }
            true
        });
    }
    InferenceOutcome {
        estimates: states.iter().map(|s| s.finalize().ok()).collect(),
        complete: states.iter().map(InferenceState::is_done).collect(),
        clock: walkers.clock(),
    }
}
