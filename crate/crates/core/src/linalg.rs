//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Replace `m` by `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0)
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let tol = rel_tol * scale(m);
    let n = m.nrows();
    (0..n).all(|i| ((i + 1)..n).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Symmetric and Cholesky-factorizable.
pub fn is_spd(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
        && is_symmetric(m, 1e-10)
        && m.clone().cholesky().is_some()
}

/// Symmetric with smallest eigenvalue above `-1e-12 * max|m_ij|`.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    if !m.iter().all(|v| v.is_finite()) || !is_symmetric(m, 1e-10) {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    min_eigenvalue(m) >= -1e-12 * scale(m)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let mut s = m.clone();
    symmetrize(&mut s);
    s.symmetric_eigenvalues().min()
}

pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = m.clone().cholesky()?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

/// Solve `m x = b` for symmetric positive definite `m`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    Some(m.clone().cholesky()?.solve(b))
}

/// Factor `G` with `G Gᵀ = cov` for a symmetric PSD covariance.
///
/// Cholesky when possible, otherwise an eigen-decomposition square root with
/// negative round-off eigenvalues clamped to zero.
pub fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !is_psd(cov) {
        return Err(Error::NotPsd);
    }
    if cov.iter().all(|v| *v == 0.0) {
        return Ok(DMatrix::zeros(cov.nrows(), cov.ncols()));
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let mut s = cov.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

pub fn standard_normal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Draw `N(0, G Gᵀ)` given the factor `G`.
pub fn sample_with_factor<R: Rng + ?Sized>(factor: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    factor * standard_normal(factor.ncols(), rng)
}

/// Numerical rank from singular values with threshold `rel_tol * σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

/// `B ⊗ I_d`.
pub fn kron_identity(b: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(b.nrows() * d, b.ncols() * d, |r, c| {
        if r % d == c % d {
            b[(r / d, c / d)]
        } else {
            0.0
        }
    })
}

pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Concatenate equally sized vectors.
pub fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    )
}

/// Split a stacked vector into `len / d` blocks of size `d`.
pub fn unstack(v: &DVector<f64>, d: usize) -> Vec<DVector<f64>> {
    (0..v.len() / d).map(|i| v.rows(i * d, d).into_owned()).collect()
}
