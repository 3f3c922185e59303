//! Random and structured graph layouts.
//!
//! Sampled layouts place node 0 at the origin and the remaining nodes uniformly
//! in the square `[-side/2, side/2]²`. Random layouts are resampled until the
//! graph is connected.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg;
use crate::{Error, Result};

const MAX_TRIES: usize = 1000;

/// Node positions plus an undirected 0-based edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayout {
    pub positions: Vec<DVector<f64>>,
    pub edges: Vec<(usize, usize)>,
}

fn sample_square<R: Rng + ?Sized>(n: usize, side: f64, rng: &mut R) -> Vec<DVector<f64>> {
    (0..n)
        .map(|i| {
            if i == 0 {
                DVector::zeros(2)
            } else {
                DVector::from_fn(2, |_, _| (rng.random::<f64>() - 0.5) * side)
            }
        })
        .collect()
}

/// All pairs closer than `radius`.
pub fn radius_edges(positions: &[DVector<f64>], radius: f64) -> Vec<(usize, usize)> {
    let n = positions.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if (&positions[i] - &positions[j]).norm() <= radius {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub(crate) fn edges_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components <= 1
}

fn check_params(n: usize, side: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::NonPositiveParam { name: "nodes", value: 0.0 });
    }
    if !(side > 0.0) {
        return Err(Error::NonPositiveParam { name: "side", value: side });
    }
    Ok(())
}

/// Random geometric graph with connection radius `radius`, conditioned on
/// connectivity.
pub fn random_geometric<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    side: f64,
    rng: &mut R,
) -> Result<GraphLayout> {
    check_params(n, side)?;
    if !(radius > 0.0) {
        return Err(Error::NonPositiveParam { name: "radius", value: radius });
    }
    for _ in 0..MAX_TRIES {
        let positions = sample_square(n, side, rng);
        let edges = radius_edges(&positions, radius);
        if edges_connected(n, &edges) {
            return Ok(GraphLayout { positions, edges });
        }
    }
    Err(Error::DisconnectedGraph)
}

/// Random geometric graph with exactly `m` edges: the radius is set to the
/// `m`-th smallest pairwise distance of each sampled layout.
pub fn random_geometric_with_edge_count<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    side: f64,
    rng: &mut R,
) -> Result<GraphLayout> {
    check_params(n, side)?;
    let max_edges = n * (n - 1) / 2;
    if m + 1 < n || m > max_edges {
        return Err(Error::Config(format!(
            "{m} edges cannot form a connected simple graph on {n} nodes"
        )));
    }
    for _ in 0..MAX_TRIES {
        let positions = sample_square(n, side, rng);
        let mut pairs = Vec::with_capacity(max_edges);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push(((&positions[i] - &positions[j]).norm(), i, j));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let edges: Vec<_> = pairs[..m].iter().map(|&(_, i, j)| (i, j)).collect();
        if edges_connected(n, &edges) {
            return Ok(GraphLayout { positions, edges });
        }
    }
    Err(Error::DisconnectedGraph)
}

/// Erdős–Rényi `G(n, p)` conditioned on connectivity, with uniform positions.
pub fn erdos_renyi_connected<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    side: f64,
    rng: &mut R,
) -> Result<GraphLayout> {
    check_params(n, side)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::NonPositiveParam { name: "probability", value: p });
    }
    for _ in 0..MAX_TRIES {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if edges_connected(n, &edges) {
            let positions = sample_square(n, side, rng);
            return Ok(GraphLayout { positions, edges });
        }
    }
    Err(Error::DisconnectedGraph)
}

/// Nodes on the horizontal axis at `0, spacing, 2·spacing, …`, chained.
pub fn path_graph(n: usize, spacing: f64) -> GraphLayout {
    GraphLayout {
        positions: (0..n)
            .map(|i| DVector::from_vec(vec![i as f64 * spacing, 0.0]))
            .collect(),
        edges: (1..n).map(|i| (i - 1, i)).collect(),
    }
}

/// Random SPD matrix with eigenvalues in `[min_eig, max_eig]` and a random basis.
pub fn random_spd<R: Rng + ?Sized>(d: usize, min_eig: f64, max_eig: f64, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| linalg::standard_normal(1, rng)[0]);
    let q = g.qr().q();
    let eig = DVector::from_fn(d, |_, _| min_eig + (max_eig - min_eig) * rng.random::<f64>());
    let mut m = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    linalg::symmetrize(&mut m);
    m
}
