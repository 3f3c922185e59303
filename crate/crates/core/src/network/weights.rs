use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ensure_connected, SensorNetwork};
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Rule used to pick the consensus weights `κ_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `κ_ij = 1 / (1 + max(deg_i, deg_j))`; symmetric, so `π` is uniform.
    #[default]
    Metropolis,
    /// `κ_ij = 1 / (1 + deg_i)` over the closed neighborhood.
    LazyUniform,
}

/// Row-stochastic consensus matrix supported on the closed neighborhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    k: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.k[(i, j)]
    }

    pub fn node_count(&self) -> usize {
        self.k.nrows()
    }

    /// `(j, κ_ij)` for `j ∈ N_i ∪ {i}`, self first.
    pub fn closed_row(&self, net: &SensorNetwork, i: usize) -> Vec<(usize, f64)> {
        std::iter::once((i, self.k[(i, i)]))
            .chain(net.neighbors(i).iter().map(|nb| (nb.node, self.k[(i, nb.node)])))
            .collect()
    }

    pub fn stationary_distribution(&self) -> Result<DVector<f64>> {
        stationary_distribution(&self.k)
    }
}

pub fn metropolis_weights(net: &SensorNetwork) -> Result<WeightMatrix> {
    build(net, |i, j| 1.0 / (1.0 + net.degree(i).max(net.degree(j)) as f64))
}

pub fn lazy_uniform_weights(net: &SensorNetwork) -> Result<WeightMatrix> {
    build(net, |i, _| 1.0 / (1.0 + net.degree(i) as f64))
}

pub fn consensus_weights(net: &SensorNetwork, rule: WeightRule) -> Result<WeightMatrix> {
    match rule {
        WeightRule::Metropolis => metropolis_weights(net),
        WeightRule::LazyUniform => lazy_uniform_weights(net),
    }
}

fn build(net: &SensorNetwork, off_diag: impl Fn(usize, usize) -> f64) -> Result<WeightMatrix> {
    ensure_connected(net)?;
    let n = net.node_count();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for nb in net.neighbors(i) {
            let w = off_diag(i, nb.node);
            k[(i, nb.node)] = w;
            off += w;
        }
        k[(i, i)] = 1.0 - off;
    }
    Ok(WeightMatrix { k })
}

/// Left Perron vector of a primitive row-stochastic matrix, normalized to sum 1.
///
/// Solved centrally by replacing one equation of `(Kᵀ − I) π = 0` with the
/// normalization and refining once.
pub fn stationary_distribution(k: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = k.nrows();
    if !k.is_square() || n == 0 {
        return Err(Error::NotStochastic(format!("shape {:?}", k.shape())));
    }
    for i in 0..n {
        let row = k.row(i);
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NotStochastic(format!("row {i} has a negative entry")));
        }
        let s = row.sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
    }
    if !is_primitive(k) {
        return Err(Error::NotPrimitive);
    }
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }

    let mut a = k.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut pi = lu.solve(&b).ok_or(Error::NotPrimitive)?;
    let r = &b - &a * &pi;
    if let Some(dx) = lu.solve(&r) {
        pi += dx;
    }
    let total = pi.sum();
    pi /= total;
    Ok(pi)
}

/// Irreducible (strongly connected support) with period 1.
fn is_primitive(k: &DMatrix<f64>) -> bool {
    let n = k.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let w = if forward { k[(u, v)] } else { k[(v, u)] };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    if !reach(true) || !reach(false) {
        return false;
    }
    // Period = gcd over support edges u→v of level(u) + 1 − level(v).
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if k[(u, v)] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..n {
        for v in 0..n {
            if k[(u, v)] > 0.0 {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
    }
    g == 1
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
