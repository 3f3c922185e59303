use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg;
use crate::{Error, Result};

/// Linear target dynamics `y(t+1) = F y(t) + η(t)`, `η ~ N(0, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    dynamics: DMatrix<f64>,
    process_noise: DMatrix<f64>,
    noise_factor: DMatrix<f64>,
}

impl TargetModel {
    pub fn new(dynamics: DMatrix<f64>, process_noise: DMatrix<f64>) -> Result<Self> {
        let d = dynamics.nrows();
        if !dynamics.is_square() || process_noise.shape() != (d, d) {
            return Err(Error::dims(format!(
                "F is {:?} and W is {:?}",
                dynamics.shape(),
                process_noise.shape()
            )));
        }
        let noise_factor = linalg::covariance_factor(&process_noise)?;
        Ok(Self { dynamics, process_noise, noise_factor })
    }

    /// `F = I`, `W = 0`.
    pub fn static_target(dim: usize) -> Self {
        Self {
            dynamics: DMatrix::identity(dim, dim),
            process_noise: DMatrix::zeros(dim, dim),
            noise_factor: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dynamics.nrows()
    }

    pub fn dynamics(&self) -> &DMatrix<f64> {
        &self.dynamics
    }

    pub fn process_noise(&self) -> &DMatrix<f64> {
        &self.process_noise
    }

    pub fn is_static(&self) -> bool {
        self.dynamics == DMatrix::identity(self.dim(), self.dim())
            && self.process_noise.iter().all(|v| *v == 0.0)
    }

    pub fn step<R: Rng + ?Sized>(&self, y: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        if y.len() != self.dim() {
            return Err(Error::dims(format!("state has {} entries, model {}", y.len(), self.dim())));
        }
        let mut next = &self.dynamics * y;
        if self.process_noise.iter().any(|v| *v != 0.0) {
            next += linalg::sample_with_factor(&self.noise_factor, rng);
        }
        Ok(next)
    }
}

pub fn step_target<R: Rng + ?Sized>(
    model: &TargetModel,
    y: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    model.step(y, rng)
}

/// Planar double integrator with state `[p¹, p², ṗ¹, ṗ²]`, sampling period `tau`
/// and diffusion strength `q`:
///
/// ```text
/// F = [I  τI]      W = q [τ³/3 I  τ²/2 I]
///     [0   I]            [τ²/2 I    τ I ]
/// ```
pub fn double_integrator(tau: f64, q: f64) -> Result<TargetModel> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::NonPositiveParam { name: "tau", value: tau });
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::NonPositiveParam { name: "q", value: q });
    }
    let mut f = DMatrix::identity(4, 4);
    f[(0, 2)] = tau;
    f[(1, 3)] = tau;
    let mut w = DMatrix::zeros(4, 4);
    for k in 0..2 {
        w[(k, k)] = q * tau.powi(3) / 3.0;
        w[(k, k + 2)] = q * tau * tau / 2.0;
        w[(k + 2, k)] = q * tau * tau / 2.0;
        w[(k + 2, k + 2)] = q * tau;
    }
    TargetModel::new(f, w)
}
