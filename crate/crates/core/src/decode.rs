//! Peeling decoders over symbolic storage.
//!
//! A stored packet is represented by the set of IDs XORed into it. Decoding
//! repeatedly takes an equation with exactly one unresolved ID, resolves it,
//! and strikes it from every other equation. The set of resolved IDs at the
//! fixed point does not depend on the order in which singletons are taken.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("query references pre-code output {0}, which has no entry in the pre-code map")]
    MissingPrecode(u32),
}

/// Stored ID sets of the queried nodes. Empty sets are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuerySet {
    pub sets: Vec<Vec<u32>>,
}

impl QuerySet {
    pub fn new(sets: Vec<Vec<u32>>) -> Self {
        QuerySet { sets }
    }

    /// Number of queried nodes, `h`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// Recovered source IDs, ascending.
    pub recovered: Vec<u32>,
    pub success: bool,
}

/// Peels a sparse GF(2) system. Each equation lists variable IDs (duplicates
/// cancel). Returns which variables were resolved.
fn peel_system<'a, I>(vars: usize, equations: I) -> Vec<bool>
where
    I: IntoIterator<Item = &'a [u32]>,
{
    let mut unknown: Vec<u32> = Vec::new();
    let mut xor: Vec<u32> = Vec::new();
    let mut incidence: Vec<Vec<u32>> = vec![Vec::new(); vars];
    let mut scratch: Vec<u32> = Vec::new();
    for eq in equations {
        scratch.clear();
        scratch.extend_from_slice(eq);
        scratch.sort_unstable();
        // Pairs of equal IDs cancel under XOR.
        let mut canceled: Vec<u32> = Vec::with_capacity(scratch.len());
        for &v in &scratch {
            if canceled.last() == Some(&v) {
                canceled.pop();
            } else {
                canceled.push(v);
            }
        }
        let e = unknown.len() as u32;
        unknown.push(canceled.len() as u32);
        xor.push(canceled.iter().fold(0, |a, &v| a ^ v));
        for v in canceled {
            incidence[v as usize].push(e);
        }
    }
    let mut known = vec![false; vars];
    let mut ripple: Vec<u32> = (0..unknown.len() as u32)
        .filter(|&e| unknown[e as usize] == 1)
        .collect();
    while let Some(e) = ripple.pop() {
        if unknown[e as usize] != 1 {
            continue;
        }
        let v = xor[e as usize];
        known[v as usize] = true;
        for &f in &incidence[v as usize] {
            let f = f as usize;
            unknown[f] -= 1;
            xor[f] ^= v;
            if unknown[f] == 1 {
                ripple.push(f as u32);
            }
        }
    }
    known
}

/// Peels the queried sets over source IDs `0..k`. Succeeds when every one of
/// the `k` sources is recovered.
pub fn peel(query: &QuerySet, k: usize) -> Decoded {
    let vars = query
        .sets
        .iter()
        .flatten()
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(0)
        .max(k);
    let known = peel_system(vars, query.sets.iter().map(Vec::as_slice));
    let recovered: Vec<u32> = (0..vars as u32).filter(|&v| known[v as usize]).collect();
    let success = known[..k].iter().all(|&b| b);
    Decoded { recovered, success }
}

/// Two-stage decoding for Raptor-style storage.
///
/// `query` holds sets of pre-code output IDs in `0..m`; `precode_map[j]`
/// lists the sources XORed into pre-code output `j`. Recovered pre-code
/// outputs are substituted by their source sets and peeled over sources;
/// sources recovered there make further pre-code outputs known, which feeds
/// back into the query. Runs to the joint fixed point.
pub fn peel_two_stage(
    query: &QuerySet,
    precode_map: &[Vec<u32>],
    k: usize,
    m: usize,
) -> Result<Decoded, DecodeError> {
    if let Some(&bad) = query
        .sets
        .iter()
        .flatten()
        .find(|&&j| j as usize >= m || j as usize >= precode_map.len())
    {
        return Err(DecodeError::MissingPrecode(bad));
    }
    let m = m.min(precode_map.len());
    let source_vars = precode_map
        .iter()
        .take(m)
        .flatten()
        .map(|&s| s as usize + 1)
        .max()
        .unwrap_or(0)
        .max(k);
    let offset = source_vars as u32;
    let inner: Vec<Vec<u32>> = query
        .sets
        .iter()
        .map(|s| s.iter().map(|&j| j + offset).collect())
        .collect();
    let definitions: Vec<Vec<u32>> = precode_map
        .iter()
        .take(m)
        .enumerate()
        .map(|(j, srcs)| {
            let mut eq = srcs.clone();
            eq.push(j as u32 + offset);
            eq
        })
        .collect();
    let known = peel_system(
        source_vars + m,
        inner.iter().chain(definitions.iter()).map(Vec::as_slice),
    );
    let recovered: Vec<u32> = (0..offset).filter(|&v| known[v as usize]).collect();
    let success = known[..k].iter().all(|&b| b);
    Ok(Decoded { recovered, success })
}
