//! Decentralized Fountain-code storage for wireless sensor networks.
//!
//! Source packets perform simple random walks over a random geometric graph.
//! Every node infers the network size and the number of sources from the
//! visit pattern of those walks, draws a code degree, and XORs passing packets
//! into its single storage slot. The result is an LT code (or, with an outer
//! pre-code, a Raptor code) spread over the whole network, decodable by a
//! peeling decoder from any slightly-more-than-`k` nodes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the CLI live in the `dcstore` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decode;
pub mod estimate;
pub mod graph;
pub mod ltcds;
pub mod math;
pub mod rcds;
pub mod rng;
pub mod soliton;
pub mod trial;
pub mod walk;

pub use decode::{peel, peel_two_stage, DecodeError, Decoded, QuerySet};
pub use estimate::{Estimates, InferenceState};
pub use graph::{GraphError, Network};
pub use ltcds::{DegreeFamily, LtcdsConfig, LtcdsOutcome, StorageState};
pub use rcds::{CopyDistribution, PrecodeConfig, PrecodeOutcome, RcdsOutcome};
pub use soliton::{DegreeDistribution, SolitonError};
pub use walk::{Packet, SimClock, Walkers};
