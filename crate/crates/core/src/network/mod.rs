//! Sensor network graphs and the matrix algebra built on them.
//!
//! A [`SensorNetwork`] is an undirected graph whose nodes carry true
//! configurations `x_i ∈ ℝ^d` and whose edges carry the covariance `ℰ_ij` of the
//! relative measurements exchanged along them. Node 0 is the anchor: localization
//! estimates are expressed in its frame.

mod generators;
pub mod io;
mod laplacian;
mod weights;

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result};

pub use generators::{
    erdos_renyi_connected, path_graph, random_geometric, random_geometric_with_edge_count,
    random_spd, radius_edges, GraphLayout,
};
pub(crate) use generators::edges_connected;
pub use laplacian::{jacobi_spectral_radius, laplacian_set, LaplacianSet};
pub use weights::{
    consensus_weights, lazy_uniform_weights, metropolis_weights, stationary_distribution,
    WeightMatrix, WeightRule,
};

/// An undirected edge `{a, b}` with `a < b` and its relative-measurement noise.
#[derive(Debug, Clone)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl Edge {
    /// `ℰ_ab`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `ℰ_ab⁻¹`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Lower Cholesky factor of `ℰ_ab`.
    pub fn noise_factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub edge: usize,
}

#[derive(Debug, Clone)]
pub struct SensorNetwork {
    dim: usize,
    positions: Vec<DVector<f64>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl SensorNetwork {
    /// Validate and build a network. `edges` are 0-based unordered pairs and
    /// `edge_cov[k]` is the covariance of `edges[k]`.
    pub fn new(
        positions: Vec<DVector<f64>>,
        edges: &[(usize, usize)],
        edge_cov: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::dims("a network needs at least one node"));
        }
        let dim = positions[0].len();
        if dim == 0 || positions.iter().any(|p| p.len() != dim) {
            return Err(Error::dims("all node positions must share a nonzero dimension"));
        }
        if edge_cov.len() != edges.len() {
            return Err(Error::dims(format!(
                "{} edges but {} edge covariances",
                edges.len(),
                edge_cov.len()
            )));
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(edges.len());
        for (k, (&(i, j), cov)) in edges.iter().zip(edge_cov).enumerate() {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::NodeOutOfRange { index: idx, nodes: n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            let (a, b) = (i.min(j), i.max(j));
            if !seen.insert((a, b)) {
                return Err(Error::DuplicateEdge(a, b));
            }
            if cov.shape() != (dim, dim) {
                return Err(Error::dims(format!(
                    "edge {{{a}, {b}}} covariance is {:?}, expected {dim}x{dim}",
                    cov.shape()
                )));
            }
            if !linalg::is_spd(&cov) {
                return Err(Error::NonSpdCovariance(a, b));
            }
            let mut cov = cov;
            linalg::symmetrize(&mut cov);
            let precision = linalg::spd_inverse(&cov).ok_or(Error::NonSpdCovariance(a, b))?;
            let factor = cov.clone().cholesky().ok_or(Error::NonSpdCovariance(a, b))?.l();
            adjacency[a].push(Neighbor { node: b, edge: k });
            adjacency[b].push(Neighbor { node: a, edge: k });
            out.push(Edge { a, b, cov, precision, factor });
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|nb| nb.node);
        }
        Ok(Self { dim, positions, edges: out, adjacency })
    }

    /// Build with `ℰ_ij = std² I` on every edge.
    pub fn with_isotropic_noise(
        positions: Vec<DVector<f64>>,
        edges: &[(usize, usize)],
        std: f64,
    ) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::NonPositiveParam { name: "edge_std", value: std });
        }
        let d = positions.first().map_or(0, |p| p.len());
        let cov = DMatrix::identity(d, d) * (std * std);
        Self::new(positions, edges, vec![cov; edges.len()])
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[DVector<f64>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &DVector<f64> {
        &self.positions[i]
    }

    /// True configurations in the anchor frame, `x_i − x_0`.
    pub fn relative_positions(&self) -> Vec<DVector<f64>> {
        self.positions.iter().map(|p| p - &self.positions[0]).collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> &Edge {
        &self.edges[k]
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency
            .get(i)?
            .iter()
            .find(|nb| nb.node == j)
            .map(|nb| nb.edge)
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self)
    }

    /// Edge list as 0-based pairs, in edge order.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }
}

/// See [`SensorNetwork::new`].
pub fn build_network(
    positions: Vec<DVector<f64>>,
    edges: &[(usize, usize)],
    edge_cov: Vec<DMatrix<f64>>,
) -> Result<SensorNetwork> {
    SensorNetwork::new(positions, edges, edge_cov)
}

/// Breadth-first search from node 0.
pub fn is_connected(net: &SensorNetwork) -> bool {
    let n = net.node_count();
    let mut visited = vec![false; n];
    let mut queue = VecDeque::from([0]);
    visited[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for nb in net.neighbors(u) {
            if !visited[nb.node] {
                visited[nb.node] = true;
                count += 1;
                queue.push_back(nb.node);
            }
        }
    }
    count == n
}

pub(crate) fn ensure_connected(net: &SensorNetwork) -> Result<()> {
    if net.is_connected() {
        Ok(())
    } else {
        Err(Error::DisconnectedGraph)
    }
}
