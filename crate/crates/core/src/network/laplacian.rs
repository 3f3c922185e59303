use nalgebra::DMatrix;

use super::{ensure_connected, SensorNetwork};
use crate::linalg;
use crate::{Error, Result};

/// Matrix-weighted graph matrices of a network, full and with the anchor's
/// block row and column removed (the `reduced_*` fields).
///
/// Every matrix here is `nd × nd` (or `(n−1)d × (n−1)d` reduced) except the
/// incidence maps, which are `md × nd` and `md × (n−1)d`, and the stacked edge
/// covariance, which is `md × md`. Edge `k = {a, b}` with `a < b` is oriented
/// so that row block `k` of the incidence map reads `x_b − x_a`.
#[derive(Debug, Clone)]
pub struct LaplacianSet {
    pub dim: usize,
    pub degree: DMatrix<f64>,
    pub adjacency: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub signless_laplacian: DMatrix<f64>,
    pub reduced_degree: DMatrix<f64>,
    pub reduced_adjacency: DMatrix<f64>,
    pub reduced_laplacian: DMatrix<f64>,
    pub reduced_signless_laplacian: DMatrix<f64>,
    /// `R = (B ⊗ I_d)ᵀ`.
    pub incidence_map: DMatrix<f64>,
    /// `R̃`, `R` without the anchor's block column.
    pub reduced_incidence_map: DMatrix<f64>,
    /// Block-diagonal `ℰ` in edge order.
    pub edge_covariance: DMatrix<f64>,
}

impl LaplacianSet {
    /// Block-diagonal `ℰ⁻¹`.
    pub fn edge_precision(&self, net: &SensorNetwork) -> DMatrix<f64> {
        let blocks: Vec<_> = net.edges().iter().map(|e| e.precision().clone()).collect();
        linalg::block_diagonal(&blocks)
    }

    /// Signed node-by-edge incidence matrix `B`.
    pub fn incidence(net: &SensorNetwork) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(net.node_count(), net.edge_count());
        for (k, e) in net.edges().iter().enumerate() {
            b[(e.a, k)] = -1.0;
            b[(e.b, k)] = 1.0;
        }
        b
    }
}

fn drop_anchor(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    m.view((d, d), (m.nrows() - d, m.ncols() - d)).into_owned()
}

pub fn laplacian_set(net: &SensorNetwork) -> LaplacianSet {
    let n = net.node_count();
    let d = net.dim();
    let mut degree = DMatrix::zeros(n * d, n * d);
    let mut adjacency = DMatrix::zeros(n * d, n * d);
    for e in net.edges() {
        let p = e.precision();
        for (u, v) in [(e.a, e.b), (e.b, e.a)] {
            let mut blk = degree.view_mut((u * d, u * d), (d, d));
            blk += p;
            adjacency.view_mut((u * d, v * d), (d, d)).copy_from(p);
        }
    }
    let laplacian = &degree - &adjacency;
    let signless_laplacian = &degree + &adjacency;

    let incidence_map = linalg::kron_identity(&LaplacianSet::incidence(net), d).transpose();
    let reduced_incidence_map = incidence_map.columns(d, (n - 1) * d).into_owned();
    let covs: Vec<_> = net.edges().iter().map(|e| e.covariance().clone()).collect();

    LaplacianSet {
        dim: d,
        reduced_degree: drop_anchor(&degree, d),
        reduced_adjacency: drop_anchor(&adjacency, d),
        reduced_laplacian: drop_anchor(&laplacian, d),
        reduced_signless_laplacian: drop_anchor(&signless_laplacian, d),
        degree,
        adjacency,
        laplacian,
        signless_laplacian,
        incidence_map,
        reduced_incidence_map,
        edge_covariance: linalg::block_diagonal(&covs),
    }
}

/// Spectral radius of the Jacobi iteration matrix `D̃⁻¹Ã`.
///
/// With `D̃ = G Gᵀ` blockwise, `D̃⁻¹Ã` is similar to the symmetric
/// `G⁻¹ Ã G⁻ᵀ`, so the radius is the largest absolute symmetric eigenvalue.
/// A connected graph always yields a value below one; anything else is
/// reported as [`Error::UnstableIteration`].
pub fn jacobi_spectral_radius(net: &SensorNetwork) -> Result<f64> {
    ensure_connected(net)?;
    let n = net.node_count();
    if n <= 1 {
        return Ok(0.0);
    }
    let d = net.dim();
    let m = (n - 1) * d;

    let mut inv_factors = Vec::with_capacity(n - 1);
    for i in 1..n {
        let mut blk = DMatrix::zeros(d, d);
        for nb in net.neighbors(i) {
            blk += net.edge(nb.edge).precision();
        }
        let l = blk.cholesky().ok_or(Error::SingularDegreeBlock(i))?.l();
        inv_factors.push(l.try_inverse().ok_or(Error::SingularDegreeBlock(i))?);
    }
    let mut s = DMatrix::zeros(m, m);
    for e in net.edges() {
        if e.a == 0 {
            continue;
        }
        let (u, v) = (e.a - 1, e.b - 1);
        let blk = &inv_factors[u] * e.precision() * inv_factors[v].transpose();
        s.view_mut((u * d, v * d), (d, d)).copy_from(&blk);
        s.view_mut((v * d, u * d), (d, d)).copy_from(&blk.transpose());
    }
    let rho = s
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()));
    if rho >= 1.0 {
        return Err(Error::UnstableIteration(rho));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn path(n: usize, var: f64) -> SensorNetwork {
        let pos = (0..n).map(|i| DVector::from_element(1, i as f64)).collect();
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        let covs = vec![DMatrix::from_element(1, 1, var); edges.len()];
        SensorNetwork::new(pos, &edges, covs).unwrap()
    }

    #[test]
    fn two_node_path_matrices() {
        let l = laplacian_set(&path(2, 1.0));
        assert_eq!(l.degree, DMatrix::identity(2, 2));
        assert_eq!(l.adjacency, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(l.laplacian, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(l.reduced_laplacian, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn edge_covariance_weights_laplacian() {
        let l = laplacian_set(&path(2, 4.0));
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((l.laplacian - expected).abs().max() < 1e-15);
    }

    #[test]
    fn jacobi_radius_small_paths() {
        assert_eq!(jacobi_spectral_radius(&path(2, 1.0)).unwrap(), 0.0);
        let rho = jacobi_spectral_radius(&path(3, 1.0)).unwrap();
        assert!((rho - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn jacobi_radius_requires_connectivity() {
        let pos = (0..3).map(|i| DVector::from_element(1, i as f64)).collect();
        let net = SensorNetwork::with_isotropic_noise(pos, &[(0, 1)], 1.0).unwrap();
        assert_eq!(jacobi_spectral_radius(&net), Err(Error::DisconnectedGraph));
    }
}
