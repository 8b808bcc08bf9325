//! File formats written by the CLI, and readers for the ones a decoder or a
//! re-run needs.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dcstore_core::graph::Network;
use dcstore_core::soliton::DegreeDistribution;
use dcstore_core::walk::TraceEvent;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{EstimateRow, ResultRow, StoredNode};
use crate::plan::{ExperimentPlan, PLAN_FORMAT};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One `u v` line per undirected edge, `u < v`.
pub fn write_edges(path: &Path, net: &Network) -> Result<(), IoError> {
    let mut w = create(path)?;
    for (u, v) in net.edges() {
        writeln!(w, "{u} {v}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>, IoError> {
    let r = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut edges = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| IoError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => return Err(bad("expected `u v`")),
        }
    }
    Ok(edges)
}

#[derive(Serialize)]
struct PositionRow {
    id: usize,
    x: f64,
    y: f64,
}

pub fn write_positions(path: &Path, net: &Network) -> Result<(), IoError> {
    write_rows(
        path,
        net.positions()
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| PositionRow { id, x, y }),
    )
}

#[derive(Serialize)]
struct ProbRow {
    d: usize,
    prob: f64,
}

pub fn write_distribution(path: &Path, dist: &DegreeDistribution) -> Result<(), IoError> {
    write_rows(
        path,
        (1..=dist.k()).map(|d| ProbRow { d, prob: dist.prob(d) }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StorageRow {
    node_id: usize,
    degree: usize,
    size: usize,
    ids: String,
}

fn join_ids(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

fn split_ids(s: &str) -> Result<Vec<u32>, std::num::ParseIntError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(str::parse).collect()
}

/// `node_id,degree,size,ids` with `ids` joined by `;`.
pub fn write_storage(path: &Path, nodes: &[StoredNode]) -> Result<(), IoError> {
    write_rows(
        path,
        nodes.iter().enumerate().map(|(node_id, s)| StorageRow {
            node_id,
            degree: s.degree,
            size: s.ids.len(),
            ids: join_ids(&s.ids),
        }),
    )
}

/// Reads a storage dump back, indexed by node.
pub fn read_storage(path: &Path) -> Result<Vec<StoredNode>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut nodes = Vec::new();
    for (i, row) in r.deserialize::<StorageRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let bad = |reason: String| IoError::Malformed {
            path: path.display().to_string(),
            line: i + 2,
            reason,
        };
        if row.node_id != i {
            return Err(bad(format!("expected node {i}, got {}", row.node_id)));
        }
        let ids = split_ids(&row.ids).map_err(|e| bad(e.to_string()))?;
        if ids.len() != row.size {
            return Err(bad(format!("size {} but {} ids", row.size, ids.len())));
        }
        nodes.push(StoredNode {
            degree: row.degree,
            ids,
        });
    }
    Ok(nodes)
}

#[derive(Serialize, Deserialize)]
struct PrecodeRow {
    precode_id: usize,
    source_ids: String,
}

pub fn write_precode_map(path: &Path, map: &[Vec<u32>]) -> Result<(), IoError> {
    write_rows(
        path,
        map.iter().enumerate().map(|(precode_id, s)| PrecodeRow {
            precode_id,
            source_ids: join_ids(s),
        }),
    )
}

pub fn read_precode_map(path: &Path) -> Result<Vec<Vec<u32>>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut map = Vec::new();
    for (i, row) in r.deserialize::<PrecodeRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let ids = split_ids(&row.source_ids).map_err(|e| IoError::Malformed {
            path: path.display().to_string(),
            line: i + 2,
            reason: e.to_string(),
        })?;
        map.push(ids);
    }
    Ok(map)
}

pub fn write_estimates(path: &Path, rows: &[EstimateRow]) -> Result<(), IoError> {
    write_rows(path, rows)
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<(), IoError> {
    write_rows(path, rows)
}

#[derive(Serialize)]
struct TraceRow {
    round: u64,
    #[serde(rename = "nodeId")]
    node_id: u32,
    #[serde(rename = "sourceId")]
    source_id: u32,
    #[serde(rename = "hopCounter")]
    hop_counter: u64,
    event: &'static str,
}

pub fn write_trace(path: &Path, events: &[TraceEvent]) -> Result<(), IoError> {
    write_rows(
        path,
        events.iter().map(|e| TraceRow {
            round: e.round,
            node_id: e.node,
            source_id: e.source,
            hop_counter: e.hops,
            event: e.kind.as_str(),
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub plan_format: u32,
    pub seed: u64,
    pub parallel: Option<usize>,
    pub plan: ExperimentPlan,
}

impl Manifest {
    pub fn new(plan: ExperimentPlan, parallel: Option<usize>) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            plan_format: PLAN_FORMAT,
            seed: plan.seed,
            parallel,
            plan,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}
