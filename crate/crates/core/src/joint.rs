//! Target estimation with sensor positions taken from the concurrent Jacobi
//! localization instead of the truth.
//!
//! Each sensor linearizes its observation model at its current location
//! estimate, runs the usual information-form update, and reads off the
//! regularized estimate `ŷ = (Ω + k δ I)⁻¹ ω` after `k` rounds. The
//! regularization trades an `O(δ²)` asymptotic bias for robustness to
//! transient localization errors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimation::{self, InformationState};
use crate::localization::{Initialization, JacobiOptions, LocalizationState, Localizer};
use crate::models::{sample_round, ObservationModel};
use crate::network::{ensure_connected, SensorNetwork, WeightMatrix};
use crate::{linalg, Error, Result};

pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub delta: f64,
    #[serde(default)]
    pub jacobi: JacobiOptions,
    #[serde(default)]
    pub init: Initialization,
    #[serde(default = "default_prior_eps")]
    pub prior_eps: f64,
}

fn default_prior_eps() -> f64 {
    estimation::DEFAULT_PRIOR_EPS
}

impl Default for JointConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            jacobi: JacobiOptions::default(),
            init: Initialization::default(),
            prior_eps: default_prior_eps(),
        }
    }
}

impl JointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::NonPositiveDelta(self.delta));
        }
        Ok(())
    }
}

/// `(Ω + k δ I)⁻¹ ω` with `k` the number of absorbed rounds.
pub fn regularized_estimate(state: &InformationState, delta: f64) -> Result<DVector<f64>> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let d = state.dim();
    let a = &state.info_matrix + DMatrix::identity(d, d) * (state.time as f64 * delta);
    linalg::spd_solve(&a, &state.info_vector).ok_or(Error::SingularMatrix)
}

/// Information update with the sensor model evaluated at the estimated
/// configuration `x_hat`, followed by the regularized estimate.
pub fn joint_update<O: ObservationModel + ?Sized>(
    mixture: &[(f64, &InformationState)],
    x_hat: &DVector<f64>,
    model: &O,
    z: &DVector<f64>,
    delta: f64,
) -> Result<(InformationState, DVector<f64>)> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let lg = model.linear_gaussian(x_hat)?;
    let next = estimation::update(mixture, Some((&lg, z)))?;
    let y = regularized_estimate(&next, delta)?;
    Ok((next, y))
}

/// Limit of the mean-square estimation error, `δ² yᵀ (C + δ I)⁻² y` with
/// `C = Σ_j π_j M_j`.
pub fn predict_asymptotic_mse(
    pi: &DVector<f64>,
    sensor_info: &[DMatrix<f64>],
    delta: f64,
    y: &DVector<f64>,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let c = estimation::information_limit(pi, sensor_info)?;
    if y.len() != c.nrows() {
        return Err(Error::dims("target and information dimensions differ"));
    }
    let a = c + DMatrix::identity(y.len(), y.len()) * delta;
    let v = linalg::spd_solve(&a, y).ok_or(Error::SingularMatrix)?;
    Ok(delta * delta * v.norm_squared())
}

/// State visible to the observer after each round. Target estimates are
/// computed on request, so observers that skip rounds pay nothing for them.
#[derive(Debug)]
pub struct JointSnapshot<'a> {
    pub locations: &'a LocalizationState,
    pub beliefs: &'a [InformationState],
    pub delta: f64,
}

impl JointSnapshot<'_> {
    pub fn estimates(&self) -> Result<Vec<DVector<f64>>> {
        self.beliefs.iter().map(|b| regularized_estimate(b, self.delta)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRun {
    pub locations: LocalizationState,
    pub beliefs: Vec<InformationState>,
    pub estimates: Vec<DVector<f64>>,
    pub predicted_mse: f64,
}

/// Run `rounds` rounds of joint localization and static-target estimation.
///
/// In round `t` every sensor measures the target at its true configuration,
/// updates its belief with the model evaluated at `x_0 + x̂_i(t)`, and then the
/// network takes one relative-measurement round to produce `x̂(t+1)`.
/// `observer(t, snapshot)` is called for `t = 1..=rounds` with the round-`t`
/// target estimates and the locations used to compute them.
pub fn run_joint<O, R, F>(
    net: &SensorNetwork,
    weights: &WeightMatrix,
    model: &O,
    y: &DVector<f64>,
    rounds: usize,
    config: &JointConfig,
    rng: &mut R,
    mut observer: F,
) -> Result<JointRun>
where
    O: ObservationModel + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(usize, &JointSnapshot<'_>),
{
    config.validate()?;
    ensure_connected(net)?;
    let n = net.node_count();
    if y.len() != model.state_dim() {
        return Err(Error::dims("target and observation model dimensions differ"));
    }
    let pi = weights.stationary_distribution()?;
    let sensor_info = net
        .positions()
        .iter()
        .map(|x| model.sensor_information(x))
        .collect::<Result<Vec<_>>>()?;
    let predicted_mse = predict_asymptotic_mse(&pi, &sensor_info, config.delta, y)?;
    let truth_models = net
        .positions()
        .iter()
        .map(|x| model.linear_gaussian(x))
        .collect::<Result<Vec<_>>>()?;

    let loc = Localizer::new(net, config.jacobi)?;
    let mut locations = LocalizationState::initialize(net, config.init, rng)?;
    let mut beliefs = vec![InformationState::weak_prior(y.len(), config.prior_eps); n];
    let anchor = net.position(0).clone();

    for t in 0..rounds {
        let zs = truth_models
            .iter()
            .map(|lg| lg.sample(y, rng))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mixture: Vec<_> = weights
                .closed_row(net, i)
                .into_iter()
                .map(|(j, k)| (k, &beliefs[j]))
                .collect();
            let x_hat = &anchor + &locations.estimates[i];
            let lg = model.linear_gaussian(&x_hat)?;
            next.push(estimation::update(&mixture, Some((&lg, &zs[i])))?);
        }
        beliefs = next;
        observer(t + 1, &JointSnapshot { locations: &locations, beliefs: &beliefs, delta: config.delta });
        let round = sample_round(net, t, rng);
        locations = loc.step(net, &locations, &round)?;
    }
    let estimates = beliefs.iter().map(|b| regularized_estimate(b, config.delta)).collect::<Result<_>>()?;
    Ok(JointRun { locations, beliefs, estimates, predicted_mse })
}
