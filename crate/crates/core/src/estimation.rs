//! Distributed linear estimator in information form.
//!
//! Each sensor keeps a Gaussian belief `G(ω, Ω)` over the target state. In
//! every synchronous round it replaces its prior by the weighted geometric
//! mean of its closed neighborhood's beliefs (a convex combination of the
//! information pairs), adds its own measurement information `Hᵀ V⁻¹ z` and
//! `Hᵀ V⁻¹ H`, reads off `ŷ = Ω⁻¹ ω`, and, for moving targets, applies a local
//! Kalman prediction step.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::models::{LinearGaussian, TargetModel};
use crate::network::{SensorNetwork, WeightMatrix};
use crate::{Error, Result};

/// Default `ε` of the initial information matrix `Ω₀ = ε I`.
pub const DEFAULT_PRIOR_EPS: f64 = 1e-9;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct InformationState {
    pub info_vector: DVector<f64>,
    pub info_matrix: DMatrix<f64>,
    /// Number of measurement rounds absorbed.
    pub time: usize,
}

impl InformationState {
    pub fn new(info_vector: DVector<f64>, info_matrix: DMatrix<f64>, time: usize) -> Result<Self> {
        let d = info_vector.len();
        if info_matrix.shape() != (d, d) {
            return Err(Error::dims(format!(
                "ω has {d} entries but Ω is {:?}",
                info_matrix.shape()
            )));
        }
        Ok(Self { info_vector, info_matrix, time })
    }

    /// `ω = 0`, `Ω = ε I`.
    pub fn weak_prior(dim: usize, eps: f64) -> Self {
        Self {
            info_vector: DVector::zeros(dim),
            info_matrix: DMatrix::identity(dim, dim) * eps,
            time: 0,
        }
    }

    /// Information form of `N(mean, cov)`.
    pub fn from_moments(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::dims("prior mean and covariance disagree"));
        }
        let info_matrix = linalg::spd_inverse(cov).ok_or(Error::NotPsd)?;
        let info_vector = &info_matrix * mean;
        Ok(Self { info_vector, info_matrix, time: 0 })
    }

    pub fn dim(&self) -> usize {
        self.info_vector.len()
    }

    /// `ŷ = Ω⁻¹ ω` by Cholesky.
    pub fn estimate(&self) -> Result<DVector<f64>> {
        linalg::spd_solve(&self.info_matrix, &self.info_vector).ok_or(Error::SingularInformation)
    }

    /// Like [`estimate`](Self::estimate), but falls back to the pseudo-inverse
    /// when `Ω` is nonzero yet not positive definite. The flag is `true` for a
    /// degraded (pseudo-inverse) estimate.
    pub fn estimate_with_fallback(&self) -> Result<(DVector<f64>, bool)> {
        if let Ok(y) = self.estimate() {
            return Ok((y, false));
        }
        if self.info_matrix.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularInformation);
        }
        let pinv = self
            .info_matrix
            .clone()
            .pseudo_inverse(1e-12 * self.info_matrix.amax())
            .map_err(|_| Error::SingularInformation)?;
        Ok((pinv * &self.info_vector, true))
    }

    /// `tr(Ω⁻¹)`, if `Ω` is positive definite.
    pub fn covariance_trace(&self) -> Option<f64> {
        linalg::spd_inverse(&self.info_matrix).map(|p| p.trace())
    }
}

pub fn estimate(state: &InformationState) -> Result<DVector<f64>> {
    state.estimate()
}

/// Weighted geometric mean of Gaussian beliefs: `G(Σ κ_j ω_j, Σ κ_j Ω_j)`.
pub fn geometric_mix(mixture: &[(f64, &InformationState)]) -> Result<InformationState> {
    let Some((_, first)) = mixture.first() else {
        return Err(Error::WeightSumViolation(0.0));
    };
    let total: f64 = mixture.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL || mixture.iter().any(|(w, _)| *w < 0.0) {
        return Err(Error::WeightSumViolation(total));
    }
    let d = first.dim();
    let mut w = DVector::zeros(d);
    let mut m = DMatrix::zeros(d, d);
    let mut time = 0;
    for (k, s) in mixture {
        if s.dim() != d {
            return Err(Error::dims("neighbor beliefs have different dimensions"));
        }
        w.axpy(*k, &s.info_vector, 1.0);
        m.zip_apply(&s.info_matrix, |a, b| *a += k * b);
        time = time.max(s.time);
    }
    linalg::symmetrize(&mut m);
    Ok(InformationState { info_vector: w, info_matrix: m, time })
}

/// One estimator update: geometric averaging over the closed neighborhood
/// (`mixture`, weights summing to one) followed by the Bayes step with the
/// sensor's own reading, if any.
pub fn update(
    mixture: &[(f64, &InformationState)],
    reading: Option<(&LinearGaussian, &DVector<f64>)>,
) -> Result<InformationState> {
    let mut next = geometric_mix(mixture)?;
    if let Some((obs, z)) = reading {
        if obs.state_dim() != next.dim() {
            return Err(Error::dims("observation model and belief dimensions differ"));
        }
        next.info_vector += obs.information_vector(z)?;
        next.info_matrix += obs.information_matrix();
        linalg::symmetrize(&mut next.info_matrix);
    }
    next.time += 1;
    Ok(next)
}

/// Kalman prediction in information form:
/// `Ω' = (F Ω⁻¹ Fᵀ + W)⁻¹`, `ω' = Ω' F ŷ`.
pub fn predict(state: &InformationState, model: &TargetModel) -> Result<InformationState> {
    if model.dim() != state.dim() {
        return Err(Error::dims("target model and belief dimensions differ"));
    }
    if model.is_static() {
        return Ok(state.clone());
    }
    let chol = state.info_matrix.clone().cholesky().ok_or(Error::SingularInformation)?;
    let y = chol.solve(&state.info_vector);
    let f = model.dynamics();
    let mut cov = f * chol.inverse() * f.transpose() + model.process_noise();
    linalg::symmetrize(&mut cov);
    let info_matrix = linalg::spd_inverse(&cov).ok_or(Error::NonInvertiblePrediction)?;
    let info_vector = &info_matrix * (f * y);
    Ok(InformationState { info_vector, info_matrix, time: state.time })
}

/// A sensor's linear model and measurement for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub model: LinearGaussian,
    pub z: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    /// Beliefs to carry into the next round (predicted if dynamic).
    pub states: Vec<InformationState>,
    /// Post-update estimates, taken before prediction.
    pub estimates: Vec<DVector<f64>>,
    /// Nodes whose estimate needed the pseudo-inverse fallback.
    pub degraded: Vec<usize>,
}

/// One synchronous round of the distributed estimator. Every sensor reads
/// only the round-`t` beliefs in `states`; `readings[i] = None` means sensor
/// `i` has no measurement this round. With `model = Some(_)` each sensor
/// predicts after extracting its estimate.
pub fn run_round(
    net: &SensorNetwork,
    weights: &WeightMatrix,
    states: &[InformationState],
    readings: &[Option<SensorReading>],
    model: Option<&TargetModel>,
) -> Result<RoundOutput> {
    let n = net.node_count();
    if states.len() != n || readings.len() != n || weights.node_count() != n {
        return Err(Error::dims("one belief, one reading slot and one weight row per node"));
    }
    let mut out = RoundOutput {
        states: Vec::with_capacity(n),
        estimates: Vec::with_capacity(n),
        degraded: Vec::new(),
    };
    for i in 0..n {
        let mixture: Vec<_> = weights
            .closed_row(net, i)
            .into_iter()
            .map(|(j, k)| (k, &states[j]))
            .collect();
        let reading = readings[i].as_ref().map(|r| (&r.model, &r.z));
        let updated = update(&mixture, reading)?;
        let (y, degraded) = updated.estimate_with_fallback()?;
        if degraded {
            out.degraded.push(i);
        }
        let next = match model {
            Some(m) => predict(&updated, m)?,
            None => updated,
        };
        out.estimates.push(y);
        out.states.push(next);
    }
    Ok(out)
}

/// `true` iff the stacked observation matrices have full column rank
/// (singular values above `1e-10 σ_max`).
pub fn check_rank_condition(hs: &[DMatrix<f64>]) -> Result<bool> {
    Ok(stacked_rank(hs)? == hs[0].ncols())
}

/// Rank of the stacked observation matrices.
pub fn stacked_rank(hs: &[DMatrix<f64>]) -> Result<usize> {
    let Some(first) = hs.first() else {
        return Err(Error::dims("no observation matrices"));
    };
    let cols = first.ncols();
    if hs.iter().any(|h| h.ncols() != cols) {
        return Err(Error::dims("observation matrices have different column counts"));
    }
    let rows: usize = hs.iter().map(|h| h.nrows()).sum();
    let mut stacked = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for h in hs {
        stacked.rows_mut(r, h.nrows()).copy_from(h);
        r += h.nrows();
    }
    Ok(linalg::numerical_rank(&stacked, 1e-10))
}

/// `Σ_j π_j M_j`, the limit of `Ω_{i,t} / (t+1)` for a static target.
pub fn information_limit(pi: &DVector<f64>, sensor_info: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if pi.len() != sensor_info.len() || sensor_info.is_empty() {
        return Err(Error::dims("one stationary weight per sensor information matrix"));
    }
    let d = sensor_info[0].nrows();
    let mut c = DMatrix::zeros(d, d);
    for (p, m) in pi.iter().zip(sensor_info) {
        if m.shape() != (d, d) {
            return Err(Error::dims("sensor information matrices differ in shape"));
        }
        c += m * *p;
    }
    linalg::symmetrize(&mut c);
    Ok(c)
}

/// Normalized information `B_it = Ω_{i,t} / (t+1)` against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorDiagnostics {
    pub normalized: Vec<DMatrix<f64>>,
    pub limit: DMatrix<f64>,
}

impl EstimatorDiagnostics {
    /// `t` is the number of rounds the states have absorbed.
    pub fn new(states: &[InformationState], t: usize, limit: DMatrix<f64>) -> Self {
        let normalized = states
            .iter()
            .map(|s| &s.info_matrix / (t as f64 + 1.0))
            .collect();
        Self { normalized, limit }
    }

    /// `‖B_it − C‖_F / ‖C‖_F`.
    pub fn relative_gap(&self, i: usize) -> f64 {
        (&self.normalized[i] - &self.limit).norm() / self.limit.norm()
    }

    pub fn max_relative_gap(&self) -> f64 {
        (0..self.normalized.len())
            .map(|i| self.relative_gap(i))
            .fold(0.0, f64::max)
    }
}
