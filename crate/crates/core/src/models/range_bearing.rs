//! Planar range-bearing sensing of a target position.
//!
//! Noise standard deviations grow linearly with the true distance `d`:
//! `σ_r = σ_r0 (1 + α d)` and `σ_b = σ_b0 (1 + α d)`. Bearings use `atan2` and
//! live in `(-π, π]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LinearGaussian;
use crate::linalg;
use crate::{Error, Result};

/// Distances below this are treated as coincident.
const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBearingParams {
    /// Base range noise std (m).
    pub sigma_range: f64,
    /// Base bearing noise std (rad).
    pub sigma_bearing: f64,
    /// Linear growth of both stds with distance (1/m).
    pub alpha: f64,
}

impl RangeBearingParams {
    pub fn new(sigma_range: f64, sigma_bearing: f64, alpha: f64) -> Result<Self> {
        let p = Self { sigma_range, sigma_bearing, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_range > 0.0) {
            return Err(Error::NonPositiveParam { name: "sigma_range", value: self.sigma_range });
        }
        if !(self.sigma_bearing > 0.0) {
            return Err(Error::NonPositiveParam { name: "sigma_bearing", value: self.sigma_bearing });
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::NonPositiveParam { name: "alpha", value: self.alpha });
        }
        Ok(())
    }

    /// `(σ_r, σ_b)` at distance `d`.
    pub fn noise_std(&self, d: f64) -> (f64, f64) {
        let g = 1.0 + self.alpha * d;
        (self.sigma_range * g, self.sigma_bearing * g)
    }

    pub fn noise_cov(&self, d: f64) -> DMatrix<f64> {
        let (sr, sb) = self.noise_std(d);
        DMatrix::from_diagonal(&DVector::from_vec(vec![sr * sr, sb * sb]))
    }

    /// Linearize at the estimated state `y_hat` (position in its first two
    /// entries) and turn the raw measurement into the equivalent linear one,
    /// `z̃ = H ŷ + (z − h(ŷ))` with the bearing residual wrapped to `(-π, π]`.
    pub fn linearized_measurement(
        &self,
        sensor: &DVector<f64>,
        y_hat: &DVector<f64>,
        z: &DVector<f64>,
    ) -> Result<(LinearGaussian, DVector<f64>)> {
        let pos = y_hat.rows(0, 2).into_owned();
        let lg = linearize_range_bearing(self, sensor, &pos, y_hat.len())?;
        let predicted = range_bearing_mean(sensor, &pos)?;
        let residual = DVector::from_vec(vec![
            z[0] - predicted[0],
            wrap_angle(z[1] - predicted[1]),
        ]);
        let z_lin = lg.h() * y_hat + residual;
        Ok((lg, z_lin))
    }
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn offset(sensor: &DVector<f64>, target: &DVector<f64>) -> Result<(f64, f64, f64)> {
    if sensor.len() != 2 || target.len() < 2 {
        return Err(Error::dims("range-bearing sensing is planar"));
    }
    let (dx, dy) = (target[0] - sensor[0], target[1] - sensor[1]);
    let d = dx.hypot(dy);
    if d < MIN_DISTANCE {
        return Err(Error::CoincidentTargetSensor);
    }
    Ok((dx, dy, d))
}

/// Noiseless `(range, bearing)`.
pub fn range_bearing_mean(sensor: &DVector<f64>, target_pos: &DVector<f64>) -> Result<DVector<f64>> {
    let (dx, dy, d) = offset(sensor, target_pos)?;
    Ok(DVector::from_vec(vec![d, dy.atan2(dx)]))
}

pub fn observe_range_bearing<R: Rng + ?Sized>(
    params: &RangeBearingParams,
    sensor: &DVector<f64>,
    target_pos: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let mean = range_bearing_mean(sensor, target_pos)?;
    let (sr, sb) = params.noise_std(mean[0]);
    let n = linalg::standard_normal(2, rng);
    Ok(DVector::from_vec(vec![mean[0] + sr * n[0], mean[1] + sb * n[1]]))
}

/// Jacobian of the range-bearing map at `target_pos`, zero-padded to
/// `state_dim` columns, with the noise covariance evaluated at the same distance.
pub fn linearize_range_bearing(
    params: &RangeBearingParams,
    sensor: &DVector<f64>,
    target_pos: &DVector<f64>,
    state_dim: usize,
) -> Result<LinearGaussian> {
    if state_dim < 2 {
        return Err(Error::dims("state must contain a planar position"));
    }
    let (dx, dy, d) = offset(sensor, target_pos)?;
    let mut h = DMatrix::zeros(2, state_dim);
    h[(0, 0)] = dx / d;
    h[(0, 1)] = dy / d;
    h[(1, 0)] = -dy / (d * d);
    h[(1, 1)] = dx / (d * d);
    LinearGaussian::new(h, params.noise_cov(d))
}
