use nalgebra::DVector;
use rand::Rng;

use crate::linalg;
use crate::network::SensorNetwork;
use crate::{Error, Result};

/// `s_ij(t) = x_j − x_i + ε_ij(t)`, taken by sensor `from = i` about `to = j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMeasurement {
    pub from: usize,
    pub to: usize,
    pub time: usize,
    pub value: DVector<f64>,
}

/// Draw `s_ij` and `s_ji` for edge `{i, j}` with independent noise
/// `ε, ε' ~ N(0, ℰ_ij)`.
pub fn sample_relative<R: Rng + ?Sized>(
    net: &SensorNetwork,
    i: usize,
    j: usize,
    time: usize,
    rng: &mut R,
) -> Result<(RelativeMeasurement, RelativeMeasurement)> {
    let k = net.edge_index(i, j).ok_or(Error::NotAnEdge(i, j))?;
    let factor = net.edge(k).noise_factor();
    let diff = net.position(j) - net.position(i);
    let s_ij = &diff + linalg::sample_with_factor(factor, rng);
    let s_ji = -&diff + linalg::sample_with_factor(factor, rng);
    Ok((
        RelativeMeasurement { from: i, to: j, time, value: s_ij },
        RelativeMeasurement { from: j, to: i, time, value: s_ji },
    ))
}

/// All relative measurements of one synchronous round, indexed by edge.
///
/// For edge `k = {a, b}` with `a < b`, `forward[k]` is `s_ab` (taken by `a`)
/// and `backward[k]` is `s_ba` (taken by `b`).
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRound {
    pub time: usize,
    forward: Vec<Option<DVector<f64>>>,
    backward: Vec<Option<DVector<f64>>>,
}

impl RelativeRound {
    pub fn empty(net: &SensorNetwork, time: usize) -> Self {
        Self {
            time,
            forward: vec![None; net.edge_count()],
            backward: vec![None; net.edge_count()],
        }
    }

    pub fn insert(&mut self, net: &SensorNetwork, m: RelativeMeasurement) -> Result<()> {
        let k = net.edge_index(m.from, m.to).ok_or(Error::NotAnEdge(m.from, m.to))?;
        if m.value.len() != net.dim() {
            return Err(Error::dims("relative measurement dimension"));
        }
        if m.from == net.edge(k).a {
            self.forward[k] = Some(m.value);
        } else {
            self.backward[k] = Some(m.value);
        }
        Ok(())
    }

    /// Measurement taken by `node` about `neighbor` on edge `k`.
    pub fn get(&self, net: &SensorNetwork, k: usize, node: usize) -> Option<&DVector<f64>> {
        if node == net.edge(k).a {
            self.forward[k].as_ref()
        } else {
            self.backward[k].as_ref()
        }
    }

    /// Iterate `(from, to, s_from_to)` over the stored measurements.
    pub fn measurements<'a>(
        &'a self,
        net: &'a SensorNetwork,
    ) -> impl Iterator<Item = (usize, usize, &'a DVector<f64>)> + 'a {
        net.edges().iter().enumerate().flat_map(move |(k, e)| {
            let f = self.forward[k].as_ref().map(|s| (e.a, e.b, s));
            let b = self.backward[k].as_ref().map(|s| (e.b, e.a, s));
            f.into_iter().chain(b)
        })
    }
}

/// One measurement per direction on every edge.
pub fn sample_round<R: Rng + ?Sized>(
    net: &SensorNetwork,
    time: usize,
    rng: &mut R,
) -> RelativeRound {
    let mut round = RelativeRound::empty(net, time);
    for (k, e) in net.edges().iter().enumerate() {
        let diff = net.position(e.b) - net.position(e.a);
        let factor = e.noise_factor();
        round.forward[k] = Some(&diff + linalg::sample_with_factor(factor, rng));
        round.backward[k] = Some(-&diff + linalg::sample_with_factor(factor, rng));
    }
    round
}
