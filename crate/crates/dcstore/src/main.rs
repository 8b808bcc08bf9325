use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use dcstore_sim::experiments::{self, ExperimentError, EstimateRow, PlanOutput};
use dcstore_sim::io::{self, Manifest};
use dcstore_sim::plan::{ExperimentPlan, PlanError, Sweep, PLAN_FORMAT};
use dcstore_core::graph::density_is_sparse;
use log::{info, warn};

#[derive(Parser)]
#[command(name = "dcstore", about = "Distributed Fountain-code storage simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a plan and write results.csv plus requested artifacts.
    Run {
        plan: PathBuf,
        #[arg(long, env = "DCSTORE_OUT_DIR")]
        out: PathBuf,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Run inference only and write per-node estimates.
    EstimateHist {
        plan: PathBuf,
        #[arg(long, env = "DCSTORE_OUT_DIR")]
        out: PathBuf,
        #[arg(long)]
        parallel: Option<usize>,
    },
}

enum Failure {
    Plan(String),
    Sim(String),
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        Failure::Plan(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Plan(p) => p.into(),
            e => Failure::Sim(e.to_string()),
        }
    }
}

impl From<io::IoError> for Failure {
    fn from(e: io::IoError) -> Self {
        Failure::Sim(e.to_string())
    }
}

fn load_plan(path: &Path) -> Result<ExperimentPlan, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Plan(format!("{}: {e}", path.display())))?;
    let plan = ExperimentPlan::from_toml(&text)?;
    if density_is_sparse(plan.density) {
        warn!(
            "density {} is below 4; connected graphs may be hard to generate",
            plan.density
        );
    }
    Ok(plan)
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Sim(format!("{}: {e}", out.display())))
}

fn write_artifacts(out: &Path, plan: &ExperimentPlan, output: &PlanOutput) -> Result<(), Failure> {
    let first = &output.trials[0];
    if plan.outputs.network {
        io::write_edges(&out.join("edges.txt"), &first.network)?;
        io::write_positions(&out.join("positions.csv"), &first.network)?;
    }
    if plan.outputs.storage {
        io::write_storage(&out.join("storage.csv"), &first.storage)?;
        if let Some(map) = &first.precode_map {
            io::write_precode_map(&out.join("precode.csv"), map)?;
        }
    }
    if plan.outputs.trace {
        io::write_trace(&out.join("trace.csv"), &first.trace)?;
    }
    if plan.outputs.estimates {
        let rows: Vec<EstimateRow> = output
            .trials
            .iter()
            .flat_map(|t| {
                t.estimates.iter().enumerate().filter_map(move |(node_id, e)| {
                    e.map(|e| EstimateRow {
                        trial: t.trial,
                        node_id,
                        n_hat: e.n_hat,
                        k_hat: e.k_hat,
                        k_seen: e.k_seen,
                    })
                })
            })
            .collect();
        io::write_estimates(&out.join("estimates.csv"), &rows)?;
    }
    Ok(())
}

fn run(plan_path: &Path, out: &Path, seed: Option<u64>, parallel: Option<usize>) -> Result<(), Failure> {
    let mut plan = load_plan(plan_path)?;
    if let Some(seed) = seed {
        plan.seed = seed;
    }
    if parallel == Some(0) {
        return Err(Failure::Plan("invalid field `parallel`: must be at least 1".into()));
    }
    prepare_out(out)?;
    io::write_manifest(&out.join("manifest.json"), &Manifest::new(plan.clone(), parallel))?;
    info!("running {} trials of {}", plan.seeds, plan.algorithm.as_str());
    let sweep = plan.sweep.clone().unwrap_or(Sweep { c1: None, c2: None });
    let rows = match (&sweep.c1, &sweep.c2) {
        (Some(c1s), _) => experiments::sweep_c1(&plan, c1s, parallel)?,
        (_, Some(c2s)) => experiments::sweep_c2(&plan, c2s, parallel)?,
        _ => {
            let output = experiments::run_plan(&plan, parallel)?;
            write_artifacts(out, &plan, &output)?;
            output.rows
        }
    };
    io::write_results(&out.join("results.csv"), &rows)?;
    Ok(())
}

fn estimate_hist(plan_path: &Path, out: &Path, parallel: Option<usize>) -> Result<(), Failure> {
    let plan = load_plan(plan_path)?;
    prepare_out(out)?;
    io::write_manifest(&out.join("manifest.json"), &Manifest::new(plan.clone(), parallel))?;
    let rows = experiments::estimate_histograms(&plan, parallel)?;
    io::write_estimates(&out.join("estimates.csv"), &rows)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let version = format!("{} (plan format {PLAN_FORMAT})", env!("CARGO_PKG_VERSION"));
    let matches = Cli::command().version(version).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = match &cli.command {
        Command::Run {
            plan,
            out,
            seed,
            parallel,
        } => run(plan, out, *seed, *parallel),
        Command::EstimateHist { plan, out, parallel } => estimate_hist(plan, out, *parallel),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Plan(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Sim(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
