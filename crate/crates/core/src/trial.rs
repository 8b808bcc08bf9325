//! Pieces shared by every experiment trial: source placement and the
//! random-subset decoding probe.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::decode::{peel, QuerySet};
use crate::rng::{self, Purpose};

/// `k` distinct source nodes chosen uniformly among `n`.
pub fn place_sources(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::Sources, 0);
    index::sample(&mut rng, n, k).into_vec()
}

/// `h = round(η k)`.
pub fn query_size(eta: f64, k: usize) -> usize {
    libm::round(eta * k as f64) as usize
}

/// Draws `subsets` uniform node subsets of size `h` and counts how many
/// decode, using `decodes` on the stored sets of each subset.
pub fn count_successes<R, F>(
    stored: &[Vec<u32>],
    h: usize,
    subsets: usize,
    rng: &mut R,
    mut decodes: F,
) -> usize
where
    R: Rng + ?Sized,
    F: FnMut(&QuerySet) -> bool,
{
    let mut query = QuerySet::default();
    (0..subsets)
        .filter(|_| {
            query.sets.clear();
            query
                .sets
                .extend(index::sample(rng, stored.len(), h).iter().map(|u| stored[u].clone()));
            decodes(&query)
        })
        .count()
}

/// Single-stage LT success counts, one per entry of `etas`.
pub fn lt_success_counts(stored: &[Vec<u32>], k: usize, etas: &[f64], subsets: usize, seed: u64) -> Vec<usize> {
    etas.iter()
        .enumerate()
        .map(|(i, &eta)| {
            let mut rng = rng::stream(seed, Purpose::Query, i as u64);
            count_successes(stored, query_size(eta, k), subsets, &mut rng, |q| peel(q, k).success)
        })
        .collect()
}
