//! Scenario configuration, Monte Carlo replication and output files.
//!
//! Replicate `k` of a scenario with base seed `s` draws its measurement noise
//! from seed `s + k`. The network (and static target, if any) is drawn once
//! from seed `s` on a separate stream and shared by all replicates, unless
//! `network.resample` asks for a fresh one per replicate.

pub mod config;
pub mod metrics;
mod run;
mod setup;

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::joint::predict_asymptotic_mse;
use crate::network::{is_connected, jacobi_spectral_radius};
use crate::{estimation, Error, Result};

pub use config::{Scenario, ScenarioKind};
pub use metrics::{rmse, rmse_series, MetricsSeries, RawMetric, Reduce, Series};
pub use run::{recorded_times, run_replicates, run_scenario, run_scenario_full, shared_setup, ScenarioOutput};
pub use setup::{build_network, prepare, Setup, StaticTarget};

/// Write `metrics.csv`, `config.echo`, `plot.gp` and any dumps into `dir`.
pub fn write_outputs(dir: &Path, scenario: &Scenario, out: &ScenarioOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    };
    write("metrics.csv", &out.metrics.to_csv())?;
    write("config.echo", &scenario.echo())?;
    write("plot.gp", &out.metrics.plot_script())?;
    if let Some(d) = &out.state_dump {
        write("state_dump.csv", d)?;
    }
    if let Some(d) = &out.trace_dump {
        write("trace_dump.csv", d)?;
    }
    Ok(())
}

/// Static properties of a scenario's network and sensing model.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub nodes: usize,
    pub edges: usize,
    pub connected: bool,
    /// Stacked observation rank and target dimension, when the scenario has
    /// a static target.
    pub rank: Option<(usize, usize)>,
    pub jacobi_radius: f64,
    pub stationary: DVector<f64>,
    pub delta: f64,
    /// Asymptotic error of the regularized estimator for the scenario's
    /// target at `delta`.
    pub predicted_mse: Option<f64>,
}

impl AnalysisReport {
    pub fn rank_ok(&self) -> bool {
        self.rank.is_none_or(|(r, d)| r == d)
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "edges: {}", self.edges)?;
        writeln!(f, "connected: {}", self.connected)?;
        match self.rank {
            Some((r, d)) if r == d => writeln!(f, "rank condition: satisfied (rank {r} of {d})")?,
            Some((r, d)) => writeln!(f, "rank condition: violated (rank {r} of {d})")?,
            None => writeln!(f, "rank condition: not applicable")?,
        }
        writeln!(f, "jacobi spectral radius: {:.5}", self.jacobi_radius)?;
        if self.stationary.len() <= 10 {
            let pi: Vec<String> = self.stationary.iter().map(|p| format!("{p:.6}")).collect();
            writeln!(f, "stationary distribution: [{}]", pi.join(", "))?;
        } else {
            writeln!(
                f,
                "stationary distribution: min {:.6}, max {:.6} over {} nodes",
                self.stationary.min(),
                self.stationary.max(),
                self.stationary.len()
            )?;
        }
        match self.predicted_mse {
            Some(m) => writeln!(f, "predicted asymptotic mse (delta {}): {m:.6e}", self.delta),
            None => writeln!(f, "predicted asymptotic mse: not applicable"),
        }
    }
}

/// Connectivity, rank condition, Jacobi spectral radius, stationary weights
/// and predicted asymptotic error of a scenario. Fails with
/// [`Error::DisconnectedGraph`] on disconnected networks.
pub fn analyze(scenario: &Scenario) -> Result<AnalysisReport> {
    scenario.validate()?;
    let setup = shared_setup(scenario)?;
    let net = &setup.net;
    let connected = is_connected(net);
    let jacobi_radius = jacobi_spectral_radius(net)?;
    let stationary = setup.weights.stationary_distribution()?;
    let (rank, predicted_mse) = match &setup.target {
        Some(t) => {
            let r = estimation::stacked_rank(&t.observation_matrices())?;
            let mse = predict_asymptotic_mse(&stationary, &t.sensor_information(), scenario.joint.delta, &t.y)?;
            (Some((r, t.y.len())), Some(mse))
        }
        None => (None, None),
    };
    Ok(AnalysisReport {
        nodes: net.node_count(),
        edges: net.edge_count(),
        connected,
        rank,
        jacobi_radius,
        stationary,
        delta: scenario.joint.delta,
        predicted_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_toml_str(text).unwrap()
    }

    const PATH3: &str = r#"
kind = "localization-only"
horizon = 5
[network]
generator = "edge_list"
positions = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]
edge_pairs = [[1, 2], [2, 3]]
edge_std = 1.0
"#;

    #[test]
    fn analyze_three_node_path() {
        let r = analyze(&scenario(PATH3)).unwrap();
        assert!((r.jacobi_radius - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(r.connected);
        assert!(r.to_string().contains("jacobi spectral radius: 0.70711"));
    }

    #[test]
    fn analyze_rejects_disconnected() {
        let text = PATH3.replace("[[1, 2], [2, 3]]", "[[1, 2]]");
        assert_eq!(analyze(&scenario(&text)), Err(Error::DisconnectedGraph));
    }

    #[test]
    fn analyze_flags_rank_deficiency() {
        let text = r#"
kind = "static-field"
horizon = 5
[network]
generator = "path"
nodes = 2
[static_target]
dim = 3
"#;
        let r = analyze(&scenario(text)).unwrap();
        assert_eq!(r.rank, Some((2, 3)));
        assert!(!r.rank_ok());
        assert!(r.to_string().contains("rank condition: violated"));
        assert!(matches!(run_scenario(&scenario(text)), Err(Error::RankDeficient { rank: 2, dim: 3 })));
    }

    #[test]
    fn noiseless_static_limit() {
        let text = r#"
kind = "static-field"
horizon = 200
replicates = 1
record_every = 50
[network]
generator = "path"
nodes = 5
[static_target]
dim = 2
noise_std = 1e-9
"#;
        let m = run_scenario(&scenario(text)).unwrap();
        assert_eq!(m.times, vec![50, 100, 150, 200]);
        assert!(m.last("target_rmse").unwrap() < 1e-6);
    }

    #[test]
    fn writes_output_files() {
        let dir = std::env::temp_dir().join(format!("netloc-sim-{}", std::process::id()));
        let mut s = scenario(PATH3);
        s.output.state_dump = true;
        s.output.trace_dump = true;
        let out = run_scenario_full(&s).unwrap();
        write_outputs(&dir, &s, &out).unwrap();
        for f in ["metrics.csv", "config.echo", "plot.gp", "state_dump.csv", "trace_dump.csv"] {
            assert!(dir.join(f).exists(), "{f}");
        }
        let _ = fs::remove_dir_all(&dir);
    }
}
