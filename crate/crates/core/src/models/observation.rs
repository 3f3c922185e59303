use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg;
use crate::{Error, Result};

/// `z = H y + v`, `v ~ N(0, V)` at a fixed sensor configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussian {
    h: DMatrix<f64>,
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    v_factor: DMatrix<f64>,
}

impl LinearGaussian {
    pub fn new(h: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if v.shape() != (h.nrows(), h.nrows()) {
            return Err(Error::dims(format!("H is {:?} but V is {:?}", h.shape(), v.shape())));
        }
        if !linalg::is_spd(&v) {
            return Err(Error::NonSpdNoise);
        }
        let v_inv = linalg::spd_inverse(&v).ok_or(Error::NonSpdNoise)?;
        let v_factor = v.clone().cholesky().ok_or(Error::NonSpdNoise)?.l();
        Ok(Self { h, v, v_inv, v_factor })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn output_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    /// Sensor information matrix `Hᵀ V⁻¹ H`.
    pub fn information_matrix(&self) -> DMatrix<f64> {
        let mut m = self.h.transpose() * &self.v_inv * &self.h;
        linalg::symmetrize(&mut m);
        m
    }

    /// `Hᵀ V⁻¹ z`.
    pub fn information_vector(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.output_dim() {
            return Err(Error::dims(format!(
                "measurement has {} entries, model {}",
                z.len(),
                self.output_dim()
            )));
        }
        Ok(self.h.transpose() * (&self.v_inv * z))
    }

    pub fn sample<R: Rng + ?Sized>(&self, y: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        if y.len() != self.state_dim() {
            return Err(Error::dims(format!(
                "state has {} entries, H has {} columns",
                y.len(),
                self.state_dim()
            )));
        }
        Ok(&self.h * y + linalg::sample_with_factor(&self.v_factor, rng))
    }
}

/// Sensor observation model `x ↦ (H_i(x), V_i(x))`.
pub trait ObservationModel: Send + Sync {
    fn state_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Linear-Gaussian model of a sensor at configuration `x`.
    fn linear_gaussian(&self, x: &DVector<f64>) -> Result<LinearGaussian>;

    /// `M_i(x) = H_i(x)ᵀ V_i(x)⁻¹ H_i(x)`.
    fn sensor_information(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.linear_gaussian(x)?.information_matrix())
    }
}

/// A configuration-independent linear sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLinearObservation(pub LinearGaussian);

impl FixedLinearObservation {
    pub fn new(h: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        LinearGaussian::new(h, v).map(Self)
    }
}

impl ObservationModel for FixedLinearObservation {
    fn state_dim(&self) -> usize {
        self.0.state_dim()
    }

    fn output_dim(&self) -> usize {
        self.0.output_dim()
    }

    fn linear_gaussian(&self, _x: &DVector<f64>) -> Result<LinearGaussian> {
        Ok(self.0.clone())
    }
}

/// A target measurement `z_i(t)` taken by one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub sensor: usize,
    pub time: usize,
    pub z: DVector<f64>,
}

impl Measurement {
    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }
}

/// Draw `z = H_i(x) y + v` with `v ~ N(0, V_i(x))`.
pub fn observe_linear<O, R>(
    model: &O,
    sensor_config: &DVector<f64>,
    y: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>>
where
    O: ObservationModel + ?Sized,
    R: Rng + ?Sized,
{
    model.linear_gaussian(sensor_config)?.sample(y, rng)
}
