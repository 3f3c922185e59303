//! Monte Carlo replicates of each scenario kind.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rayon::prelude::*;

use super::config::{Scenario, ScenarioKind};
use super::metrics::{MetricsSeries, RawMetric, Reduce};
use super::setup::{prepare, Setup};
use crate::estimation::{self, EstimatorDiagnostics, InformationState, SensorReading};
use crate::joint::{run_joint, JointConfig};
use crate::localization::{stacked_error, LocalizationState, Localizer};
use crate::models::{double_integrator, observe_range_bearing, sample_round, RangeBearingParams};
use crate::{Error, Result, SimRng};

/// Stream used for the shared network and target, so that they never reuse
/// a replicate's random numbers.
const SETUP_STREAM: u64 = 1;

/// Aggregated metrics plus the optional dumps of the first replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub metrics: MetricsSeries,
    pub state_dump: Option<String>,
    pub trace_dump: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct ReplicateOutput {
    metrics: Vec<RawMetric>,
    state_dump: Option<String>,
    trace_dump: Option<String>,
}

fn setup_rng(seed: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(SETUP_STREAM);
    rng
}

/// Draw the shared network and target from the scenario's base seed.
pub fn shared_setup(s: &Scenario) -> Result<Setup> {
    prepare(s, &mut setup_rng(s.seed))
}

/// Rounds at which metrics are recorded: every `record_every`-th round and
/// the last one, plus round 0 for pure localization.
pub fn recorded_times(s: &Scenario) -> Vec<usize> {
    let start = if s.kind == ScenarioKind::LocalizationOnly { 0 } else { 1 };
    (start..=s.horizon)
        .filter(|t| t % s.record_every == 0 || *t == s.horizon)
        .collect()
}

/// Run all `s.replicates` replicates with seeds `s.seed + k`.
pub fn run_scenario(s: &Scenario) -> Result<MetricsSeries> {
    run_scenario_full(s).map(|o| o.metrics)
}

pub fn run_scenario_full(s: &Scenario) -> Result<ScenarioOutput> {
    let seeds: Vec<u64> = (0..s.replicates as u64).map(|k| s.seed.wrapping_add(k)).collect();
    run_replicates(s, &seeds)
}

/// Run one replicate per seed (in parallel) and aggregate. Dumps come from
/// the first seed.
pub fn run_replicates(s: &Scenario, seeds: &[u64]) -> Result<ScenarioOutput> {
    s.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("at least one replicate seed is required".into()));
    }
    let shared = if s.network.resample { None } else { Some(shared_setup(s)?) };
    if let Some(setup) = &shared {
        setup.check_rank()?;
    }
    let outputs = seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let own;
            let setup = match &shared {
                Some(setup) => setup,
                None => {
                    own = prepare(s, &mut setup_rng(seed))?;
                    own.check_rank()?;
                    &own
                }
            };
            run_replicate(s, setup, seed, k == 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut state_dump = None;
    let mut trace_dump = None;
    let mut raw = Vec::with_capacity(outputs.len());
    for (k, o) in outputs.into_iter().enumerate() {
        if k == 0 {
            state_dump = o.state_dump;
            trace_dump = o.trace_dump;
        }
        raw.push(o.metrics);
    }
    let metrics = MetricsSeries::aggregate(&s.name(), recorded_times(s), &raw)?;
    Ok(ScenarioOutput { metrics, state_dump, trace_dump })
}

fn run_replicate(s: &Scenario, setup: &Setup, seed: u64, first: bool) -> Result<ReplicateOutput> {
    let mut rng = SimRng::seed_from_u64(seed);
    match s.kind {
        ScenarioKind::StaticField => static_replicate(s, setup, &mut rng, first),
        ScenarioKind::Tracking => tracking_replicate(s, setup, &mut rng, first),
        ScenarioKind::LocalizationOnly => localization_replicate(s, setup, &mut rng, first),
        ScenarioKind::Joint => joint_replicate(s, setup, &mut rng, first),
    }
}

fn is_recorded(s: &Scenario, t: usize) -> bool {
    t.is_multiple_of(s.record_every) || t == s.horizon
}

fn fmt_vec(out: &mut String, v: &DVector<f64>) {
    for x in v.iter() {
        let _ = write!(out, ",{x:.9e}");
    }
}

fn static_replicate(s: &Scenario, setup: &Setup, rng: &mut SimRng, first: bool) -> Result<ReplicateOutput> {
    let target = setup.target.as_ref().expect("static scenarios have a target");
    let n = setup.net.node_count();
    let dim = target.y.len();
    let limit = setup.information_limit()?.expect("static target");
    let mut err = RawMetric::new("target_rmse", Reduce::Rms, true);
    let mut gap = RawMetric::new("information_gap", Reduce::Mean, false);
    let mut dump = (first && s.output.state_dump).then(|| {
        let cols: String = (0..dim).map(|c| format!(",y{c}")).collect();
        format!("t,node{cols},cov_trace\n")
    });
    let mut states = vec![InformationState::weak_prior(dim, s.static_target.prior_eps); n];
    for t in 0..s.horizon {
        let readings = target
            .models
            .iter()
            .map(|m| Ok(Some(SensorReading { model: m.clone(), z: m.sample(&target.y, rng)? })))
            .collect::<Result<Vec<_>>>()?;
        let out = estimation::run_round(&setup.net, &setup.weights, &states, &readings, None)?;
        states = out.states;
        let time = t + 1;
        if is_recorded(s, time) {
            err.values.push(out.estimates.iter().map(|y| (y - &target.y).norm_squared()).collect());
            let diag = EstimatorDiagnostics::new(&states, time, limit.clone());
            gap.values.push(vec![diag.max_relative_gap()]);
            if let Some(d) = dump.as_mut() {
                for (i, (y, st)) in out.estimates.iter().zip(&states).enumerate() {
                    let _ = write!(d, "{time},{}", i + 1);
                    fmt_vec(d, y);
                    let _ = writeln!(d, ",{:.9e}", st.covariance_trace().unwrap_or(f64::NAN));
                }
            }
        }
    }
    Ok(ReplicateOutput { metrics: vec![err, gap], state_dump: dump, trace_dump: None })
}

fn tracking_replicate(s: &Scenario, setup: &Setup, rng: &mut SimRng, first: bool) -> Result<ReplicateOutput> {
    let cfg = &s.tracking;
    let net = &setup.net;
    let n = net.node_count();
    let params = RangeBearingParams::new(cfg.sigma_range, cfg.sigma_bearing, cfg.alpha)?;
    let model = double_integrator(cfg.tau, cfg.q)?;
    let (ps, vs) = (cfg.init_position_std, cfg.init_velocity_std);
    let prior_std = DVector::from_vec(vec![ps, ps, vs, vs]);
    let prior_cov = DMatrix::from_diagonal(&prior_std.map(|x| x * x));
    let prior = InformationState::from_moments(&DVector::zeros(4), &prior_cov)?;

    let mut truths: Vec<DVector<f64>> = (0..cfg.targets)
        .map(|_| crate::linalg::standard_normal(4, rng).component_mul(&prior_std))
        .collect();
    let mut beliefs = vec![vec![prior; n]; cfg.targets];
    let mut pos = RawMetric::new("position_rmse", Reduce::Rms, true);
    let mut vel = RawMetric::new("velocity_rmse", Reduce::Rms, true);
    let mut dump = (first && s.output.state_dump).then(|| "t,target,node,px,py,vx,vy,cov_trace\n".to_string());

    for t in 0..s.horizon {
        let time = t + 1;
        let record = is_recorded(s, time);
        let mut pos_sq = vec![0.0; n];
        let mut vel_sq = vec![0.0; n];
        for (k, y) in truths.iter_mut().enumerate() {
            let target_pos = y.rows(0, 2).into_owned();
            let mut readings = Vec::with_capacity(n);
            for (i, x) in net.positions().iter().enumerate() {
                let z = match observe_range_bearing(&params, x, &target_pos, rng) {
                    Ok(z) => z,
                    Err(Error::CoincidentTargetSensor) => {
                        readings.push(None);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let (y_hat, _) = beliefs[k][i].estimate_with_fallback()?;
                readings.push(match params.linearized_measurement(x, &y_hat, &z) {
                    Ok((lg, z_lin)) => Some(SensorReading { model: lg, z: z_lin }),
                    Err(Error::CoincidentTargetSensor) => None,
                    Err(e) => return Err(e),
                });
            }
            let out = estimation::run_round(net, &setup.weights, &beliefs[k], &readings, Some(&model))?;
            if record {
                for (i, est) in out.estimates.iter().enumerate() {
                    let e = est - &*y;
                    pos_sq[i] += e.rows(0, 2).norm_squared();
                    vel_sq[i] += e.rows(2, 2).norm_squared();
                }
                if let Some(d) = dump.as_mut() {
                    for (i, est) in out.estimates.iter().enumerate() {
                        let _ = write!(d, "{time},{},{}", k + 1, i + 1);
                        fmt_vec(d, est);
                        let tr = out.states[i].covariance_trace().unwrap_or(f64::NAN);
                        let _ = writeln!(d, ",{tr:.9e}");
                    }
                }
            }
            beliefs[k] = out.states;
            *y = model.step(y, rng)?;
        }
        if record {
            let m = cfg.targets as f64;
            pos.values.push(pos_sq.into_iter().map(|v| v / m).collect());
            vel.values.push(vel_sq.into_iter().map(|v| v / m).collect());
        }
    }
    Ok(ReplicateOutput { metrics: vec![pos, vel], state_dump: dump, trace_dump: None })
}

fn location_errors(truth: &[DVector<f64>], state: &LocalizationState) -> Vec<f64> {
    truth
        .iter()
        .zip(&state.estimates)
        .skip(1)
        .map(|(x, e)| (x - e).norm_squared())
        .collect()
}

fn localization_replicate(
    s: &Scenario,
    setup: &Setup,
    rng: &mut SimRng,
    first: bool,
) -> Result<ReplicateOutput> {
    let net = &setup.net;
    let truth = net.relative_positions();
    let loc = Localizer::new(net, s.localization.jacobi())?;
    let mut state = LocalizationState::initialize(net, s.localization.init, rng)?;
    let mut rmse = RawMetric::new("location_rmse", Reduce::Rms, true);
    rmse.first_node = 1;
    let mut err_sq = RawMetric::new("error_norm_sq", Reduce::Mean, false);
    let mut dump = (first && s.output.state_dump).then(|| {
        let cols: String = (0..net.dim()).map(|c| format!(",x{c}")).collect();
        format!("t,node{cols},error\n")
    });
    let mut trace = (first && s.output.trace_dump).then(|| {
        let cols: String = (0..net.dim()).map(|c| format!(",s{c}")).collect();
        format!("t,from,to{cols}\n")
    });
    let mut record = |t: usize, state: &LocalizationState, dump: &mut Option<String>| {
        rmse.values.push(location_errors(&truth, state));
        err_sq.values.push(vec![stacked_error(&truth, state).norm_squared()]);
        if let Some(d) = dump.as_mut() {
            for (i, (x, tr)) in state.estimates.iter().zip(&truth).enumerate() {
                let _ = write!(d, "{t},{}", i + 1);
                fmt_vec(d, x);
                let _ = writeln!(d, ",{:.9e}", (x - tr).norm());
            }
        }
    };
    record(0, &state, &mut dump);
    for t in 0..s.horizon {
        let round = sample_round(net, t, rng);
        if let Some(tr) = trace.as_mut() {
            for (from, to, v) in round.measurements(net) {
                let _ = write!(tr, "{t},{},{}", from + 1, to + 1);
                fmt_vec(tr, v);
                tr.push('\n');
            }
        }
        state = loc.step(net, &state, &round)?;
        if is_recorded(s, t + 1) {
            record(t + 1, &state, &mut dump);
        }
    }
    Ok(ReplicateOutput { metrics: vec![rmse, err_sq], state_dump: dump, trace_dump: trace })
}

fn joint_replicate(s: &Scenario, setup: &Setup, rng: &mut SimRng, first: bool) -> Result<ReplicateOutput> {
    let target = setup.target.as_ref().expect("joint scenarios have a target");
    let obs = target.field.as_ref().expect("joint scenarios sense a field");
    let net = &setup.net;
    let truth = net.relative_positions();
    let config = JointConfig {
        delta: s.joint.delta,
        jacobi: s.localization.jacobi(),
        init: s.localization.init,
        prior_eps: s.static_target.prior_eps,
    };
    let mut loc_rmse = RawMetric::new("location_rmse", Reduce::Rms, true);
    loc_rmse.first_node = 1;
    let mut tgt_rmse = RawMetric::new("target_rmse", Reduce::Rms, true);
    let mut tgt_mse = RawMetric::new("target_mse", Reduce::Mean, false);
    let mut predicted = RawMetric::new("predicted_mse", Reduce::Mean, false);
    let mut dump = (first && s.output.state_dump).then(|| {
        let cols: String = (0..target.y.len()).map(|c| format!(",y{c}")).collect();
        format!("t,node{cols},location_error\n")
    });
    let mut failure = None;
    let run = run_joint(net, &setup.weights, obs, &target.y, s.horizon, &config, rng, |t, snap| {
        if !is_recorded(s, t) || failure.is_some() {
            return;
        }
        let estimates = match snap.estimates() {
            Ok(e) => e,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let sq: Vec<f64> = estimates.iter().map(|y| (y - &target.y).norm_squared()).collect();
        tgt_mse.values.push(vec![sq.iter().sum::<f64>() / sq.len() as f64]);
        tgt_rmse.values.push(sq);
        loc_rmse.values.push(location_errors(&truth, snap.locations));
        if let Some(d) = dump.as_mut() {
            for (i, y) in estimates.iter().enumerate() {
                let _ = write!(d, "{t},{}", i + 1);
                fmt_vec(d, y);
                let _ = writeln!(d, ",{:.9e}", (&snap.locations.estimates[i] - &truth[i]).norm());
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    predicted.values = vec![vec![run.predicted_mse]; tgt_mse.values.len()];
    Ok(ReplicateOutput {
        metrics: vec![loc_rmse, tgt_rmse, tgt_mse, predicted],
        state_dump: dump,
        trace_dump: None,
    })
}
