//! Turning a scenario into a concrete network and target.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::config::{EdgeNoise, Generator, Placement, Scenario, ScenarioKind, StaticModel};
use crate::estimation;
use crate::models::{FieldGrid, FieldObservation, LinearGaussian, ObservationModel};
use crate::network::{
    self, consensus_weights, erdos_renyi_connected, io, path_graph, radius_edges, random_geometric,
    random_geometric_with_edge_count, random_spd, GraphLayout, SensorNetwork, WeightMatrix,
};
use crate::{linalg, Error, Result};

const PLACEMENT_TRIES: usize = 1000;

/// A static target and every sensor's model of it at its true configuration.
#[derive(Debug, Clone)]
pub struct StaticTarget {
    pub y: DVector<f64>,
    pub models: Vec<LinearGaussian>,
    /// Present when the target is a field.
    pub field: Option<FieldObservation>,
}

impl StaticTarget {
    pub fn observation_matrices(&self) -> Vec<DMatrix<f64>> {
        self.models.iter().map(|m| m.h().clone()).collect()
    }

    pub fn sensor_information(&self) -> Vec<DMatrix<f64>> {
        self.models.iter().map(LinearGaussian::information_matrix).collect()
    }
}

/// Everything a replicate shares with the others unless the network is
/// resampled per replicate.
#[derive(Debug, Clone)]
pub struct Setup {
    pub net: SensorNetwork,
    pub weights: WeightMatrix,
    pub grid: Option<FieldGrid>,
    pub target: Option<StaticTarget>,
}

impl Setup {
    /// `Σ_j π_j M_j` for the static target.
    pub fn information_limit(&self) -> Result<Option<DMatrix<f64>>> {
        let Some(target) = &self.target else { return Ok(None) };
        let pi = self.weights.stationary_distribution()?;
        estimation::information_limit(&pi, &target.sensor_information()).map(Some)
    }

    /// `Err(RankDeficient)` unless the stacked observation matrices at the
    /// true configurations have full column rank.
    pub fn check_rank(&self) -> Result<()> {
        if let Some(target) = &self.target {
            let rank = estimation::stacked_rank(&target.observation_matrices())?;
            if rank < target.y.len() {
                return Err(Error::RankDeficient { rank, dim: target.y.len() });
            }
        }
        Ok(())
    }
}

fn field_grid(s: &Scenario) -> Result<FieldGrid> {
    FieldGrid::centered(s.field.nx, s.field.ny, s.field.cell)
}

fn open(s: &Scenario, p: &Path) -> Result<BufReader<File>> {
    let path = s.resolve(p);
    File::open(&path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn explicit_layout(s: &Scenario) -> Result<GraphLayout> {
    let net = &s.network;
    let positions = match (&net.positions, &net.position_file) {
        (Some(p), _) => p.iter().map(|x| DVector::from_vec(x.clone())).collect(),
        (None, Some(f)) => io::read_positions(open(s, f)?)?,
        (None, None) => return Err(Error::Config("edge_list needs positions".into())),
    };
    let edges = match (&net.edge_pairs, &net.edge_file) {
        (Some(pairs), _) => pairs
            .iter()
            .map(|&[a, b]| {
                if a == 0 || b == 0 {
                    Err(Error::Config("network.edge_pairs are 1-based".into()))
                } else {
                    Ok((a - 1, b - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?,
        (None, Some(f)) => io::read_edge_list(open(s, f)?)?,
        (None, None) => return Err(Error::Config("edge_list needs edges".into())),
    };
    Ok(GraphLayout { positions, edges })
}

fn field_layout<R: Rng + ?Sized>(s: &Scenario, grid: &FieldGrid, rng: &mut R) -> Result<GraphLayout> {
    let radius = s.network.radius.unwrap_or_default();
    for _ in 0..PLACEMENT_TRIES {
        let positions = match s.field.placement {
            Placement::Boundary => grid.boundary_placement(s.network.nodes, rng),
            Placement::Uniform => grid.uniform_placement(s.network.nodes, rng),
        };
        let edges = radius_edges(&positions, radius);
        if network::edges_connected(positions.len(), &edges) {
            return Ok(GraphLayout { positions, edges });
        }
    }
    Err(Error::DisconnectedGraph)
}

/// Build the sensor network described by `[network]`, plus the field grid if
/// the scenario uses one.
pub fn build_network<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<(SensorNetwork, Option<FieldGrid>)> {
    let net = &s.network;
    let uses_field = s.kind == ScenarioKind::Joint
        || (s.kind == ScenarioKind::StaticField && s.static_target.model == StaticModel::Field)
        || net.generator == Generator::Field;
    let grid = if uses_field { Some(field_grid(s)?) } else { None };
    let layout = match net.generator {
        Generator::RandomGeometric => random_geometric(net.nodes, net.radius.unwrap_or_default(), net.side, rng)?,
        Generator::RandomGeometricEdges => {
            random_geometric_with_edge_count(net.nodes, net.edges.unwrap_or_default(), net.side, rng)?
        }
        Generator::ErdosRenyi => erdos_renyi_connected(net.nodes, net.probability.unwrap_or_default(), net.side, rng)?,
        Generator::Path => path_graph(net.nodes, net.spacing),
        Generator::EdgeList => explicit_layout(s)?,
        Generator::Field => field_layout(s, grid.as_ref().expect("field grid"), rng)?,
    };
    let d = layout.positions.first().map_or(0, DVector::len);
    let default_cov = DMatrix::identity(d, d) * (net.edge_std * net.edge_std);
    let covs: Vec<_> = match net.edge_noise {
        EdgeNoise::Isotropic => vec![default_cov.clone(); layout.edges.len()],
        EdgeNoise::RandomSpd => (0..layout.edges.len())
            .map(|_| random_spd(d, net.edge_eig[0], net.edge_eig[1], rng))
            .collect(),
    };
    let sensor_net = match &net.covariance_file {
        Some(f) => {
            let overrides = io::read_edge_covariances(open(s, f)?, d)?;
            let merged = layout
                .edges
                .iter()
                .zip(covs)
                .map(|(&(a, b), c)| overrides.get(&(a.min(b), a.max(b))).cloned().unwrap_or(c))
                .collect();
            SensorNetwork::new(layout.positions, &layout.edges, merged)?
        }
        None => SensorNetwork::new(layout.positions, &layout.edges, covs)?,
    };
    network::ensure_connected(&sensor_net)?;
    Ok((sensor_net, grid))
}

fn random_unit_row<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = linalg::standard_normal(dim, rng);
        let n = g.norm();
        if n > 1e-6 {
            return DMatrix::from_row_slice(1, dim, (g / n).as_slice());
        }
    }
}

fn static_target<R: Rng + ?Sized>(
    s: &Scenario,
    net: &SensorNetwork,
    grid: Option<&FieldGrid>,
    rng: &mut R,
) -> Result<Option<StaticTarget>> {
    let field_target = |rng: &mut R, noise_std: f64| -> Result<StaticTarget> {
        let grid = grid.expect("field scenarios build a grid").clone();
        let f = &s.field;
        let y = grid.sample_field(f.mean, f.std, f.corr_len, rng)?;
        let obs = FieldObservation::new(grid, f.interpolation, noise_std)?;
        let models = net
            .positions()
            .iter()
            .map(|x| obs.linear_gaussian(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(StaticTarget { y, models, field: Some(obs) })
    };
    match s.kind {
        ScenarioKind::StaticField => {
            let st = &s.static_target;
            match st.model {
                StaticModel::RankOne => {
                    let v = DMatrix::from_element(1, 1, st.noise_std * st.noise_std);
                    let models = (0..net.node_count())
                        .map(|_| LinearGaussian::new(random_unit_row(st.dim, rng), v.clone()))
                        .collect::<Result<Vec<_>>>()?;
                    let y = linalg::standard_normal(st.dim, rng) * st.state_std;
                    Ok(Some(StaticTarget { y, models, field: None }))
                }
                StaticModel::Field => field_target(rng, st.noise_std).map(Some),
            }
        }
        ScenarioKind::Joint => field_target(rng, s.field.noise_std).map(Some),
        _ => Ok(None),
    }
}

/// Draw the network and static target of a scenario.
pub fn prepare<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<Setup> {
    let (net, grid) = build_network(s, rng)?;
    let weights = consensus_weights(&net, s.network.weights)?;
    let target = static_target(s, &net, grid.as_ref(), rng)?;
    Ok(Setup { net, weights, grid, target })
}
