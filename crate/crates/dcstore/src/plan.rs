//! Experiment plans: the TOML documents the CLI reads and the JSON manifests
//! it writes.

use dcstore_core::ltcds::{DegreeFamily, HopBudget};
use dcstore_core::rcds::CopyDistribution;
use dcstore_core::soliton::{DEFAULT_C0, DEFAULT_DELTA};
use dcstore_core::trial::query_size;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the plan/manifest layout.
pub const PLAN_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("could not parse plan: {0}")]
    Parse(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> PlanError {
    PlanError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// LTCDS with true `n` and `k` handed to every node.
    LtcdsOracle,
    /// LTCDS with per-node inference of `n` and `k`.
    LtcdsEstimated,
    /// Pre-code followed by LTCDS over the pre-code outputs.
    Rcds,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::LtcdsOracle => "ltcds-oracle",
            Algorithm::LtcdsEstimated => "ltcds-estimated",
            Algorithm::Rcds => "rcds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyName {
    Ideal,
    Robust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeSpec {
    #[serde(default = "default_family")]
    pub family: FamilyName,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for DegreeSpec {
    fn default() -> Self {
        DegreeSpec {
            family: FamilyName::Ideal,
            c0: DEFAULT_C0,
            delta: DEFAULT_DELTA,
        }
    }
}

impl DegreeSpec {
    pub fn family(&self) -> DegreeFamily {
        match self.family {
            FamilyName::Ideal => DegreeFamily::Ideal,
            FamilyName::Robust => DegreeFamily::Robust {
                c0: self.c0,
                delta: self.delta,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetName {
    Cumulative,
    AfterInference,
}

impl From<BudgetName> for HopBudget {
    fn from(b: BudgetName) -> Self {
        match b {
            BudgetName::Cumulative => HopBudget::Cumulative,
            BudgetName::AfterInference => HopBudget::AfterInference,
        }
    }
}

/// A one-constant grid re-run of the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<Vec<u32>>,
}

/// Optional artifacts, written for the first trial (estimates: all trials).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub estimates: bool,
    #[serde(default)]
    pub storage: bool,
    #[serde(default)]
    pub network: bool,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: u32,
    /// Pre-code mixing constant; `c1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default = "default_budget")]
    pub hop_budget: BudgetName,
    #[serde(default)]
    pub degree: DegreeSpec,
    /// Pre-code outputs; `ceil(1.1 k)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// `P_LDPC` weights for `b = 0, 1, 2, …`; uniform on `{1,2,3}` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy_probs: Option<Vec<f64>>,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default = "default_subsets")]
    pub subsets: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_algorithm() -> Algorithm {
    Algorithm::LtcdsOracle
}
fn default_family() -> FamilyName {
    FamilyName::Ideal
}
fn default_c0() -> f64 {
    DEFAULT_C0
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
/// Nodes per unit area (communication radius 1).
pub fn default_density() -> f64 {
    40.0 / 9.0
}
fn default_c1() -> f64 {
    3.0
}
fn default_c2() -> u32 {
    50
}
fn default_budget() -> BudgetName {
    BudgetName::AfterInference
}
fn default_eta_grid() -> Vec<f64> {
    vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.7, 2.0, 2.5]
}
fn default_subsets() -> usize {
    200
}
fn default_seeds() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}

impl ExperimentPlan {
    /// A plan with every optional field at its default.
    pub fn new(algorithm: Algorithm, n: usize, k: usize) -> Self {
        ExperimentPlan {
            algorithm,
            n,
            k,
            density: default_density(),
            c1: default_c1(),
            c2: default_c2(),
            c3: None,
            hop_budget: default_budget(),
            degree: DegreeSpec::default(),
            m: None,
            copy_probs: None,
            eta_grid: default_eta_grid(),
            subsets: default_subsets(),
            seeds: default_seeds(),
            seed: default_seed(),
            sweep: None,
            outputs: Outputs::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        serde_json::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))
    }

    pub fn c3(&self) -> f64 {
        self.c3.unwrap_or(self.c1)
    }

    pub fn m(&self) -> usize {
        self.m
            .unwrap_or_else(|| (1.1 * self.k as f64).ceil() as usize)
    }

    pub fn copies(&self) -> Result<CopyDistribution, PlanError> {
        match &self.copy_probs {
            None => Ok(CopyDistribution::default()),
            Some(w) => CopyDistribution::from_weights(w.clone())
                .map_err(|e| invalid("copy_probs", e.to_string())),
        }
    }

    /// Checks fields in declaration order and reports the first bad one.
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.n < 2 {
            return Err(invalid("n", format!("need at least 2 nodes, got {}", self.n)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(invalid("k", format!("need 1 <= k <= n, got k={} n={}", self.k, self.n)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(invalid("density", "must be positive"));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(invalid("c1", "must be positive"));
        }
        if self.c2 < 2 && self.algorithm != Algorithm::LtcdsOracle {
            return Err(invalid("c2", "need at least 2 visits to measure a gap"));
        }
        if let Some(c3) = self.c3 {
            if !(c3 > 0.0 && c3.is_finite()) {
                return Err(invalid("c3", "must be positive"));
            }
        }
        if self.degree.family == FamilyName::Robust {
            self.degree
                .family()
                .build(self.k)
                .map_err(|e| invalid("degree", e.to_string()))?;
        }
        if self.algorithm == Algorithm::Rcds {
            let m = self.m();
            if m < self.k || m > self.n {
                return Err(invalid("m", format!("need k <= m <= n, got m={m}")));
            }
            self.copies()?;
        }
        if self.eta_grid.is_empty() {
            return Err(invalid("eta_grid", "must list at least one query ratio"));
        }
        for &eta in &self.eta_grid {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid("eta_grid", format!("query ratio {eta} must be positive")));
            }
            let h = query_size(eta, self.k);
            if h > self.n {
                return Err(invalid(
                    "eta_grid",
                    format!("eta={eta} queries h={h} nodes but n={}", self.n),
                ));
            }
        }
        if self.subsets == 0 {
            return Err(invalid("subsets", "must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(invalid("seeds", "must be at least 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.c1.is_some() && sweep.c2.is_some() {
                return Err(invalid("sweep", "sweep one constant at a time"));
            }
            if let Some(c1s) = &sweep.c1 {
                if c1s.is_empty() || c1s.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                    return Err(invalid("sweep", "c1 values must be positive"));
                }
            }
            if let Some(c2s) = &sweep.c2 {
                if c2s.is_empty() || c2s.iter().any(|&c| c < 2) {
                    return Err(invalid("sweep", "c2 values must be at least 2"));
                }
            }
        }
        Ok(())
    }
}
