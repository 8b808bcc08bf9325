//! The evaluation harness: decoding probability against query ratio,
//! constant sweeps, and transmission-count scaling.
//!
//! Every trial draws all of its randomness from `derive_seed(plan.seed, trial)`,
//! so any row can be reproduced on its own. Trials run in parallel and are
//! reduced in trial order.

use dcstore_core::decode::peel_two_stage;
use dcstore_core::estimate::Estimates;
use dcstore_core::graph::{GraphError, Network};
use dcstore_core::ltcds::{run_inference, run_ltcds, LtcdsConfig};
use dcstore_core::rcds::{run_rcds, PrecodeConfig, RcdsConfig, RcdsError};
use dcstore_core::rng::{self, derive_seed, Purpose};
use dcstore_core::trial::{count_successes, lt_success_counts, place_sources, query_size};
use dcstore_core::walk::TraceEvent;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::plan::{Algorithm, ExperimentPlan, PlanError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("trial {trial}: {source}")]
    Graph { trial: usize, source: GraphError },
    #[error("trial {trial}: {source}")]
    Rcds { trial: usize, source: RcdsError },
    #[error("trial {trial}: simulation hit the round limit")]
    RoundLimit { trial: usize },
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// One `(configuration, η)` point, aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: &'static str,
    pub n: usize,
    pub k: usize,
    pub c1: f64,
    pub c2: u32,
    pub eta: f64,
    pub h: usize,
    pub ps: f64,
    pub stderr: f64,
    pub successes: usize,
    pub attempts: usize,
    pub mean_transmissions: f64,
    pub max_queue_len: usize,
}

/// Storage of one node, as dumped for decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredNode {
    pub degree: usize,
    pub ids: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Successful decodes per entry of the η grid.
    pub successes: Vec<usize>,
    pub transmissions: u64,
    pub max_queue_len: usize,
    pub incomplete_inference: usize,
    pub estimates: Vec<Option<Estimates>>,
    pub storage: Vec<StoredNode>,
    pub precode_map: Option<Vec<Vec<u32>>>,
    pub network: Network,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
}

/// Seed of trial `trial` under the plan's global seed.
pub fn trial_seed(plan: &ExperimentPlan, trial: usize) -> u64 {
    derive_seed(plan.seed, trial as u64)
}

fn ltcds_config(plan: &ExperimentPlan, oracle: Option<(usize, usize)>, trace: bool) -> LtcdsConfig {
    LtcdsConfig {
        c1: plan.c1,
        c2: plan.c2,
        family: plan.degree.family(),
        oracle,
        hop_budget: plan.hop_budget.into(),
        trace,
        ..LtcdsConfig::default()
    }
}

/// Builds the network, places sources, runs the plan's algorithm and probes
/// decoding at every η of the grid.
pub fn run_trial(plan: &ExperimentPlan, trial: usize) -> Result<TrialRecord, ExperimentError> {
    let seed = trial_seed(plan, trial);
    let net = Network::generate(plan.n, plan.density, seed)
        .map_err(|source| ExperimentError::Graph { trial, source })?;
    let sources = place_sources(plan.n, plan.k, seed);
    let trace = plan.outputs.trace && trial == 0;
    let (outcome, precode_map) = match plan.algorithm {
        Algorithm::LtcdsOracle => (
            run_ltcds(&net, &sources, &ltcds_config(plan, Some((plan.n, plan.k)), trace), seed),
            None,
        ),
        Algorithm::LtcdsEstimated => (
            run_ltcds(&net, &sources, &ltcds_config(plan, None, trace), seed),
            None,
        ),
        Algorithm::Rcds => {
            let cfg = RcdsConfig {
                precode: PrecodeConfig {
                    m: plan.m(),
                    copies: plan.copies()?,
                    c3: plan.c3(),
                    ..PrecodeConfig::for_sources(plan.k)
                },
                inner: ltcds_config(plan, None, trace),
                inner_known: true,
            };
            let out = run_rcds(&net, &sources, &cfg, seed)
                .map_err(|source| ExperimentError::Rcds { trial, source })?;
            (out.inner, Some(out.precode.precode_map))
        }
    };
    if !outcome.finished {
        return Err(ExperimentError::RoundLimit { trial });
    }
    let stored = outcome.stored_sets();
    let successes = match &precode_map {
        None => lt_success_counts(&stored, plan.k, &plan.eta_grid, plan.subsets, seed),
        Some(map) => plan
            .eta_grid
            .iter()
            .enumerate()
            .map(|(i, &eta)| {
                let mut rng = rng::stream(seed, Purpose::Query, i as u64);
                count_successes(&stored, query_size(eta, plan.k), plan.subsets, &mut rng, |q| {
                    peel_two_stage(q, map, plan.k, map.len())
                        .map(|d| d.success)
                        .unwrap_or(false)
                })
            })
            .collect(),
    };
    let storage = outcome
        .nodes
        .iter()
        .map(|node| StoredNode {
            degree: node.storage.as_ref().map_or(0, |s| s.degree()),
            ids: node.stored(),
        })
        .collect();
    Ok(TrialRecord {
        trial,
        seed,
        successes,
        transmissions: outcome.clock.transmissions,
        max_queue_len: outcome.max_queue_len,
        incomplete_inference: outcome.incomplete_inference,
        estimates: outcome.nodes.iter().map(|n| n.estimates).collect(),
        storage,
        precode_map,
        network: net,
        trace: outcome.trace,
    })
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match threads {
        None => Ok(job()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| ExperimentError::Pool(e.to_string())),
    }
}

/// Aggregates trial records into one row per η.
pub fn aggregate(plan: &ExperimentPlan, trials: &[TrialRecord]) -> Vec<ResultRow> {
    let attempts = trials.len() * plan.subsets;
    let mean_transmissions =
        trials.iter().map(|t| t.transmissions as f64).sum::<f64>() / trials.len() as f64;
    let max_queue_len = trials.iter().map(|t| t.max_queue_len).max().unwrap_or(0);
    plan.eta_grid
        .iter()
        .enumerate()
        .map(|(i, &eta)| {
            let successes: usize = trials.iter().map(|t| t.successes[i]).sum();
            let ps = successes as f64 / attempts as f64;
            ResultRow {
                algorithm: plan.algorithm.as_str(),
                n: plan.n,
                k: plan.k,
                c1: plan.c1,
                c2: plan.c2,
                eta,
                h: query_size(eta, plan.k),
                ps,
                stderr: (ps * (1.0 - ps) / attempts as f64).sqrt(),
                successes,
                attempts,
                mean_transmissions,
                max_queue_len,
            }
        })
        .collect()
}

/// Runs every trial of the plan; `threads = None` uses the global pool.
pub fn run_plan(plan: &ExperimentPlan, threads: Option<usize>) -> Result<PlanOutput, ExperimentError> {
    plan.validate()?;
    let trials = in_pool(threads, || {
        (0..plan.seeds)
            .into_par_iter()
            .map(|t| run_trial(plan, t))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(PlanOutput {
        rows: aggregate(plan, &trials),
        trials,
    })
}

/// `run_plan` once per `C1` value.
pub fn sweep_c1(
    plan: &ExperimentPlan,
    values: &[f64],
    threads: Option<usize>,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &c1 in values {
        let p = ExperimentPlan { c1, ..plan.clone() };
        rows.extend(run_plan(&p, threads)?.rows);
    }
    Ok(rows)
}

/// `run_plan` once per `C2` value.
pub fn sweep_c2(
    plan: &ExperimentPlan,
    values: &[u32],
    threads: Option<usize>,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &c2 in values {
        let p = ExperimentPlan { c2, ..plan.clone() };
        rows.extend(run_plan(&p, threads)?.rows);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub k: usize,
    pub mean_transmissions: f64,
    /// `mean_transmissions / (k n ln n)`.
    pub normalized: f64,
}

/// Mean LTCDS transmissions for each `n`, with `k = round(ratio · n)`.
pub fn transmission_scaling(
    base: &ExperimentPlan,
    n_grid: &[usize],
    ratio: f64,
    threads: Option<usize>,
) -> Result<Vec<ScalingRow>, ExperimentError> {
    n_grid
        .iter()
        .map(|&n| {
            let k = (ratio * n as f64).round() as usize;
            let plan = ExperimentPlan {
                n,
                k,
                eta_grid: vec![1.0],
                ..base.clone()
            };
            plan.validate()?;
            let plan = ExperimentPlan {
                eta_grid: Vec::new(),
                ..plan
            };
            let trials = in_pool(threads, || {
                (0..plan.seeds)
                    .into_par_iter()
                    .map(|t| run_trial(&plan, t))
                    .collect::<Result<Vec<_>, _>>()
            })??;
            let mean =
                trials.iter().map(|t| t.transmissions as f64).sum::<f64>() / trials.len() as f64;
            let nf = n as f64;
            Ok(ScalingRow {
                n,
                k,
                mean_transmissions: mean,
                normalized: mean / (k as f64 * nf * nf.ln()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub trial: usize,
    pub node_id: usize,
    pub n_hat: f64,
    pub k_hat: usize,
    pub k_seen: usize,
}

/// Inference only, for every trial of the plan: per-node `(n̂, k̂)`.
pub fn estimate_histograms(
    plan: &ExperimentPlan,
    threads: Option<usize>,
) -> Result<Vec<EstimateRow>, ExperimentError> {
    plan.validate()?;
    let per_trial = in_pool(threads, || {
        (0..plan.seeds)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(plan, trial);
                let net = Network::generate(plan.n, plan.density, seed)
                    .map_err(|source| ExperimentError::Graph { trial, source })?;
                let sources = place_sources(plan.n, plan.k, seed);
                let out = run_inference(&net, &sources, plan.c2, seed, LtcdsConfig::default().max_rounds);
                Ok(out
                    .estimates
                    .iter()
                    .enumerate()
                    .filter_map(|(node_id, e)| {
                        e.map(|e| EstimateRow {
                            trial,
                            node_id,
                            n_hat: e.n_hat,
                            k_hat: e.k_hat,
                            k_seen: e.k_seen,
                        })
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })??;
    Ok(per_trial.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentPlan {
        ExperimentPlan {
            eta_grid: vec![1.0, 2.0],
            subsets: 20,
            seeds: 2,
            ..ExperimentPlan::new(Algorithm::LtcdsOracle, 60, 6)
        }
    }

    #[test]
    fn rows_cover_the_grid() {
        let out = run_plan(&small(), Some(1)).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[1].h, 12);
        assert!(out.rows.iter().all(|r| (0.0..=1.0).contains(&r.ps)));
        assert_eq!(out.rows[0].attempts, 40);
    }

    #[test]
    fn sweep_rows_are_tagged() {
        let rows = sweep_c1(&small(), &[1.0, 2.0], Some(1)).unwrap();
        let c1s: Vec<f64> = rows.iter().map(|r| r.c1).collect();
        assert_eq!(c1s, [1.0, 1.0, 2.0, 2.0]);
        let rows = sweep_c2(&small(), &[10, 20], Some(1)).unwrap();
        assert_eq!(rows.iter().map(|r| r.c2).collect::<Vec<_>>(), [10, 10, 20, 20]);
    }

    #[test]
    fn zero_sources_rejected() {
        let err = transmission_scaling(&small(), &[50], 0.0, Some(1)).unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn rcds_plan_runs() {
        let plan = ExperimentPlan {
            algorithm: Algorithm::Rcds,
            ..small()
        };
        let out = run_plan(&plan, Some(1)).unwrap();
        assert!(out.trials[0].precode_map.is_some());
    }
}
