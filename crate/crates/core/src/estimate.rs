//! Local estimation of the network size and the number of sources from the
//! visit record of walking packets.
//!
//! A node watches the first packet that reaches it. Once that packet has come
//! by `c2` times the node stops recording and turns its record into
//! estimates: the average per-source inter-visit time estimates `n`, and its
//! ratio to the inter-packet time (any source) estimates `k`.

use alloc::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("no source has visited more than once")]
    NoRepeatVisits,
}

/// First and last visit round and the visit count of one source at one node.
/// Sufficient statistics for the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceVisits {
    pub first: u64,
    pub last: u64,
    pub count: u32,
}

impl SourceVisits {
    /// `(t_last − t_first) / (J − 1)`, when `J ≥ 2`.
    pub fn mean_gap(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.last - self.first) as f64 / (self.count - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub n_hat: f64,
    pub k_hat: usize,
    /// Distinct sources seen while recording.
    pub k_seen: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceState {
    c2: u32,
    first_source: Option<u32>,
    visits: BTreeMap<u32, SourceVisits>,
    done: bool,
}

impl InferenceState {
    pub fn new(c2: u32) -> Self {
        InferenceState {
            c2: c2.max(1),
            first_source: None,
            visits: BTreeMap::new(),
            done: false,
        }
    }

    pub fn c2(&self) -> u32 {
        self.c2
    }

    pub fn first_source(&self) -> Option<u32> {
        self.first_source
    }

    pub fn visits(&self) -> &BTreeMap<u32, SourceVisits> {
        &self.visits
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Records a visit of `source` at `round`. Returns `false` (and records
    /// nothing) once recording has finished. Rounds must be non-decreasing.
    pub fn record_visit(&mut self, source: u32, round: u64) -> bool {
        if self.done {
            return false;
        }
        let first = *self.first_source.get_or_insert(source);
        let entry = self.visits.entry(source).or_insert(SourceVisits {
            first: round,
            last: round,
            count: 0,
        });
        entry.last = round;
        entry.count += 1;
        if source == first && entry.count >= self.c2 {
            self.done = true;
        }
        true
    }

    /// Estimates from whatever has been recorded so far.
    ///
    /// Sources seen only once carry no inter-visit gap and are left out of the
    /// average. The estimate of `k` is rounded to the nearest integer and is
    /// at least 1.
    pub fn finalize(&self) -> Result<Estimates, EstimateError> {
        let (sum, included) = self
            .visits
            .values()
            .filter_map(SourceVisits::mean_gap)
            .fold((0.0, 0usize), |(s, c), g| (s + g, c + 1));
        if included == 0 {
            return Err(EstimateError::NoRepeatVisits);
        }
        let t_visit = sum / included as f64;
        let j_min = self.visits.values().map(|v| v.first).min().unwrap_or(0);
        let j_max = self.visits.values().map(|v| v.last).max().unwrap_or(0);
        let total: u64 = self.visits.values().map(|v| v.count as u64).sum();
        let t_packet = (j_max - j_min) as f64 / total as f64;
        let k_hat = libm::round(t_visit / t_packet).max(1.0) as usize;
        Ok(Estimates {
            n_hat: t_visit,
            k_hat,
            k_seen: self.visits.len(),
        })
    }
}
