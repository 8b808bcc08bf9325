//! Seed derivation.
//!
//! Every random decision in a simulation is drawn from a ChaCha stream keyed
//! by `(global seed, purpose)` and selected by a stream index (usually the
//! node ID). Two runs with the same seed therefore make identical choices no
//! matter in which order nodes are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for. Keeps streams of different subsystems apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Placement = 1,
    Forwarding = 2,
    Coding = 3,
    Precode = 4,
    Sources = 5,
    Query = 6,
    Probe = 7,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an index, e.g. a trial number.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// The rng for `purpose`, stream `stream`, under `seed`.
pub fn stream(seed: u64, purpose: Purpose, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, purpose as u64));
    rng.set_stream(stream);
    rng
}

/// One independent stream per node.
pub fn node_streams(seed: u64, purpose: Purpose, n: usize) -> alloc::vec::Vec<SimRng> {
    (0..n as u64).map(|u| stream(seed, purpose, u)).collect()
}
