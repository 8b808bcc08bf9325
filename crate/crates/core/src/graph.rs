//! Random geometric graphs with unit communication radius.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::rng::{self, Purpose};

/// Regeneration attempts before giving up on connectivity.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("density must be positive and finite, got {0}")]
    BadDensity(f64),
    #[error("could not generate connected graph with n={n} and density={density} after {attempts} attempts")]
    Disconnected { n: usize, density: f64, attempts: u32 },
}

/// An immutable unit-disk graph on points in `[0, side]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    side: f64,
    positions: Vec<(f64, f64)>,
    adjacency: Vec<Vec<u32>>,
    mean_degree: f64,
}

/// Expected degree `λπ` below `4π` makes connectivity unlikely at moderate `n`.
pub fn density_is_sparse(density: f64) -> bool {
    density < 4.0
}

impl Network {
    /// Places `n` nodes uniformly on a square of side `sqrt(n / density)` and
    /// connects every pair at distance at most 1. Regenerates with a fresh
    /// derived stream until the graph is connected.
    pub fn generate(n: usize, density: f64, seed: u64) -> Result<Self, GraphError> {
        Self::generate_with_attempts(n, density, seed, DEFAULT_MAX_ATTEMPTS)
    }

    pub fn generate_with_attempts(
        n: usize,
        density: f64,
        seed: u64,
        max_attempts: u32,
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if !(density > 0.0 && density.is_finite()) {
            return Err(GraphError::BadDensity(density));
        }
        let side = libm::sqrt(n as f64 / density);
        for attempt in 0..max_attempts {
            let mut rng = rng::stream(seed, Purpose::Placement, attempt as u64);
            let positions = (0..n)
                .map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side))
                .collect();
            let net = Self::with_side(positions, side);
            if net.is_connected() {
                return Ok(net);
            }
        }
        Err(GraphError::Disconnected {
            n,
            density,
            attempts: max_attempts,
        })
    }

    /// Builds the graph for explicit coordinates. The side is taken as the
    /// bounding extent of the points. No connectivity requirement.
    pub fn from_positions(positions: Vec<(f64, f64)>) -> Self {
        let side = positions
            .iter()
            .fold(0.0f64, |m, &(x, y)| m.max(x).max(y));
        Self::with_side(positions, side)
    }

    fn with_side(positions: Vec<(f64, f64)>, side: f64) -> Self {
        let n = positions.len();
        // Bucket points into unit cells; neighbors lie in the 3x3 block around a cell.
        let cells_per_row = (libm::floor(side) as usize).max(0) + 1;
        let cell_of = |(x, y): (f64, f64)| {
            let cx = (libm::floor(x).max(0.0) as usize).min(cells_per_row - 1);
            let cy = (libm::floor(y).max(0.0) as usize).min(cells_per_row - 1);
            (cx, cy)
        };
        let mut cells: Vec<Vec<u32>> = vec![Vec::new(); cells_per_row * cells_per_row];
        for (i, &p) in positions.iter().enumerate() {
            let (cx, cy) = cell_of(p);
            cells[cy * cells_per_row + cx].push(i as u32);
        }
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, &(x, y)) in positions.iter().enumerate() {
            let (cx, cy) = cell_of((x, y));
            for ny in cy.saturating_sub(1)..=(cy + 1).min(cells_per_row - 1) {
                for nx in cx.saturating_sub(1)..=(cx + 1).min(cells_per_row - 1) {
                    for &j in &cells[ny * cells_per_row + nx] {
                        if j as usize == i {
                            continue;
                        }
                        let (xj, yj) = positions[j as usize];
                        let (dx, dy) = (x - xj, y - yj);
                        if dx * dx + dy * dy <= 1.0 {
                            adjacency[i].push(j);
                        }
                    }
                }
            }
            adjacency[i].sort_unstable();
        }
        let total: usize = adjacency.iter().map(Vec::len).sum();
        let mean_degree = if n == 0 { 0.0 } else { total as f64 / n as f64 };
        Network {
            side,
            positions,
            adjacency,
            mean_degree,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Sorted neighbor IDs of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    /// `(1/n) Σ μ(u)`.
    pub fn mean_degree(&self) -> f64 {
        self.mean_degree
    }

    /// Undirected edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, adj)| {
            adj.iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// True iff a breadth-first search from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_close_nodes_share_an_edge() {
        // side sqrt(2 / 100) < 1, so the pair is always within range
        let net = Network::generate(2, 100.0, 3).unwrap();
        assert_eq!(net.neighbors(0), &[1]);
        assert_eq!(net.neighbors(1), &[0]);
        assert_eq!(net.mean_degree(), 1.0);
    }

    #[test]
    fn collinear_path() {
        let net = Network::from_positions(vec![(0.0, 0.0), (0.9, 0.0), (1.8, 0.0)]);
        let degrees: Vec<usize> = (0..3).map(|u| net.degree(u)).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
        assert!(net.is_connected());
    }

    #[test]
    fn distance_exactly_one_is_adjacent() {
        let net = Network::from_positions(vec![(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(net.degree(0), 1);
    }

    #[test]
    fn far_pair_is_disconnected() {
        let net = Network::from_positions(vec![(0.0, 0.0), (2.0, 0.0)]);
        assert!(!net.is_connected());
    }

    #[test]
    fn coincident_points_form_complete_graph() {
        let net = Network::from_positions(vec![(0.5, 0.5); 5]);
        assert!(net.is_connected());
        assert!((0..5).all(|u| net.degree(u) == 4));
        assert_eq!(net.edges().count(), 10);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(Network::generate(1, 1.0, 0), Err(GraphError::TooFewNodes(1)));
        assert!(matches!(
            Network::generate(10, 0.0, 0),
            Err(GraphError::BadDensity(_))
        ));
    }

    #[test]
    fn sparse_graph_gives_up() {
        let err = Network::generate_with_attempts(400, 0.5, 1, 3).unwrap_err();
        let msg = std::string::ToString::to_string(&err);
        assert!(msg.contains("could not generate connected graph"));
        assert!(msg.contains("n=400") && msg.contains("density=0.5"));
    }

    #[test]
    fn area_tracks_density() {
        let net = Network::generate(200, 40.0 / 9.0, 11).unwrap();
        assert!((net.area() - 200.0 / (40.0 / 9.0)).abs() < 1e-9);
    }
}
