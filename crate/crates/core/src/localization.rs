//! Distributed Jacobi localization from repeated noisy relative measurements.
//!
//! Every non-anchor sensor `i` keeps an estimate `x̂_i` of its position relative
//! to the anchor (node 0, pinned at 0) and the running average
//! `σ_i(t) = (1/(t+1)) Σ_τ Σ_{j∈N_i} ℰ_ij⁻¹ m_ij(τ)` of its precision-weighted
//! relative measurements. A round is one block-Jacobi sweep
//! `x̂_i ← D_i⁻¹ (Σ_j ℰ_ij⁻¹ x̂_j − σ_i)` with `D_i = Σ_j ℰ_ij⁻¹`.
//!
//! The centralized reference is the generalized least-squares estimate
//! [`blue_estimate`], which solves `L̃ x = B̃ ℰ⁻¹ s̄` for oriented edge means `s̄`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::models::RelativeRound;
use crate::network::{ensure_connected, LaplacianSet, SensorNetwork};
use crate::{Error, Result};

/// When round-`t` measurements enter the position update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldOrder {
    /// Fold round `t` into `σ`, then sweep: `x̂(t+1)` already uses round `t`.
    #[default]
    FoldFirst,
    /// Sweep with the previous `σ`, then fold: round `t` first affects `x̂(t+2)`.
    Lagged,
}

/// How a sensor turns the two directed measurements of an edge into its term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCombination {
    /// `m_ij = (s_ij − s_ji) / 2`; the neighbor shares its reading. The
    /// iteration's fixed point is then exactly the least-squares estimate.
    #[default]
    PairAveraged,
    /// `m_ij = s_ij`, the sensor's own reading only.
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initialization {
    #[default]
    Zeros,
    /// `x̂_i(0) ~ N(x_i − x_0, std² I)`.
    Prior { std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JacobiOptions {
    #[serde(default)]
    pub order: FoldOrder,
    #[serde(default)]
    pub combination: EdgeCombination,
}

/// Estimates and running measurement averages of every sensor. Index 0 is
/// the anchor: its estimate stays exactly zero and its `σ` is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationState {
    pub estimates: Vec<DVector<f64>>,
    pub sigma: Vec<DVector<f64>>,
    /// Number of measurement rounds folded into `sigma`.
    pub folded: usize,
}

impl LocalizationState {
    pub fn zeros(net: &SensorNetwork) -> Self {
        let z = DVector::zeros(net.dim());
        Self {
            estimates: vec![z.clone(); net.node_count()],
            sigma: vec![z; net.node_count()],
            folded: 0,
        }
    }

    /// Start from the given estimates; the anchor entry is overwritten with 0.
    pub fn from_estimates(net: &SensorNetwork, mut estimates: Vec<DVector<f64>>) -> Result<Self> {
        if estimates.len() != net.node_count() || estimates.iter().any(|x| x.len() != net.dim()) {
            return Err(Error::dims("one estimate of the network dimension per node"));
        }
        estimates[0].fill(0.0);
        Ok(Self { estimates, sigma: vec![DVector::zeros(net.dim()); net.node_count()], folded: 0 })
    }

    pub fn initialize<R: Rng + ?Sized>(
        net: &SensorNetwork,
        init: Initialization,
        rng: &mut R,
    ) -> Result<Self> {
        match init {
            Initialization::Zeros => Ok(Self::zeros(net)),
            Initialization::Prior { std } => {
                if !(std >= 0.0) {
                    return Err(Error::NonPositiveParam { name: "prior std", value: std });
                }
                let est = net
                    .relative_positions()
                    .into_iter()
                    .map(|x| {
                        let n = linalg::standard_normal(x.len(), rng);
                        x + n * std
                    })
                    .collect();
                Self::from_estimates(net, est)
            }
        }
    }

    /// Stacked estimates of nodes `1..n`.
    pub fn reduced(&self) -> DVector<f64> {
        linalg::stack(&self.estimates[1..])
    }
}

/// Per-node block-Jacobi data, computed once per network.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub options: JacobiOptions,
    degree: Vec<Option<Cholesky<f64, Dyn>>>,
}

impl Localizer {
    pub fn new(net: &SensorNetwork, options: JacobiOptions) -> Result<Self> {
        let d = net.dim();
        let mut degree = vec![None];
        for i in 1..net.node_count() {
            let mut blk = DMatrix::zeros(d, d);
            for nb in net.neighbors(i) {
                blk += net.edge(nb.edge).precision();
            }
            degree.push(Some(blk.cholesky().ok_or(Error::SingularDegreeBlock(i))?));
        }
        Ok(Self { options, degree })
    }

    /// `Σ_j ℰ_ij⁻¹ m_ij` of one round for every sensor (zero for the anchor).
    pub fn round_terms(&self, net: &SensorNetwork, round: &RelativeRound) -> Result<Vec<DVector<f64>>> {
        let mut terms = vec![DVector::zeros(net.dim()); net.node_count()];
        for (i, term) in terms.iter_mut().enumerate().skip(1) {
            for nb in net.neighbors(i) {
                let own = round
                    .get(net, nb.edge, i)
                    .ok_or(Error::MissingMeasurement { node: i, neighbor: nb.node })?;
                let m = match self.options.combination {
                    EdgeCombination::Directed => own.clone(),
                    EdgeCombination::PairAveraged => {
                        let theirs = round
                            .get(net, nb.edge, nb.node)
                            .ok_or(Error::MissingMeasurement { node: nb.node, neighbor: i })?;
                        (own - theirs) * 0.5
                    }
                };
                *term += net.edge(nb.edge).precision() * m;
            }
        }
        Ok(terms)
    }

    /// One synchronous round: fold the round's measurements into `σ` and
    /// sweep, in the configured order.
    pub fn step(
        &self,
        net: &SensorNetwork,
        state: &LocalizationState,
        round: &RelativeRound,
    ) -> Result<LocalizationState> {
        let terms = self.round_terms(net, round)?;
        let folded = fold_sigma(&state.sigma, &terms, state.folded);
        let estimates = match self.options.order {
            FoldOrder::FoldFirst => self.sweep(net, &state.estimates, &folded),
            FoldOrder::Lagged => self.sweep(net, &state.estimates, &state.sigma),
        };
        Ok(LocalizationState { estimates, sigma: folded, folded: state.folded + 1 })
    }

    /// `x̂_i ← D_i⁻¹ (Σ_j ℰ_ij⁻¹ x̂_j − σ_i)` for all `i ≥ 1`, reading only `x`.
    pub fn sweep(
        &self,
        net: &SensorNetwork,
        x: &[DVector<f64>],
        sigma: &[DVector<f64>],
    ) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(x.len());
        out.push(DVector::zeros(net.dim()));
        for i in 1..x.len() {
            let mut rhs = -&sigma[i];
            for nb in net.neighbors(i) {
                rhs += net.edge(nb.edge).precision() * &x[nb.node];
            }
            let chol = self.degree[i].as_ref().expect("non-anchor degree block");
            out.push(chol.solve(&rhs));
        }
        out
    }
}

fn fold_sigma(sigma: &[DVector<f64>], terms: &[DVector<f64>], folded: usize) -> Vec<DVector<f64>> {
    let k = folded as f64;
    sigma
        .iter()
        .zip(terms)
        .map(|(s, c)| (s * k + c) / (k + 1.0))
        .collect()
}

/// One round of distributed Jacobi localization with default-constructed
/// per-node data. Prefer [`Localizer::step`] in loops.
pub fn jacobi_step(
    net: &SensorNetwork,
    state: &LocalizationState,
    round: &RelativeRound,
    options: JacobiOptions,
) -> Result<LocalizationState> {
    Localizer::new(net, options)?.step(net, state, round)
}

/// Oriented edge means `s̄_k`, each an unbiased reading of `x_b − x_a` for
/// edge `k = {a, b}`, `a < b`, averaged over rounds and both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAverager {
    sums: Vec<DVector<f64>>,
    rounds: usize,
}

impl EdgeAverager {
    pub fn new(net: &SensorNetwork) -> Self {
        Self { sums: vec![DVector::zeros(net.dim()); net.edge_count()], rounds: 0 }
    }

    pub fn add(&mut self, net: &SensorNetwork, round: &RelativeRound) -> Result<()> {
        for (k, e) in net.edges().iter().enumerate() {
            let f = round.get(net, k, e.a).ok_or(Error::MissingMeasurement { node: e.a, neighbor: e.b })?;
            let b = round.get(net, k, e.b).ok_or(Error::MissingMeasurement { node: e.b, neighbor: e.a })?;
            self.sums[k] += (f - b) * 0.5;
        }
        self.rounds += 1;
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn means(&self) -> Vec<DVector<f64>> {
        let r = self.rounds.max(1) as f64;
        self.sums.iter().map(|s| s / r).collect()
    }
}

/// Solve `L̃ x = rhs` blockwise; `rhs` and the result are indexed by node,
/// with the anchor entry ignored on input and zero on output.
fn solve_reduced(net: &SensorNetwork, rhs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    ensure_connected(net)?;
    let n = net.node_count();
    let d = net.dim();
    if n == 1 {
        return Ok(vec![DVector::zeros(d)]);
    }
    let mut l = DMatrix::zeros((n - 1) * d, (n - 1) * d);
    for e in net.edges() {
        let p = e.precision();
        for (u, v) in [(e.a, e.b), (e.b, e.a)] {
            if u == 0 {
                continue;
            }
            let mut blk = l.view_mut(((u - 1) * d, (u - 1) * d), (d, d));
            blk += p;
            if v != 0 {
                let mut off = l.view_mut(((u - 1) * d, (v - 1) * d), (d, d));
                off -= p;
            }
        }
    }
    let b = linalg::stack(&rhs[1..]);
    let x = l.cholesky().ok_or(Error::SingularMatrix)?.solve(&b);
    let mut out = vec![DVector::zeros(d)];
    out.extend(linalg::unstack(&x, d));
    Ok(out)
}

/// Generalized least-squares positions from oriented edge means (see
/// [`EdgeAverager`]). Returns one position per node, anchor at 0.
pub fn blue_estimate(net: &SensorNetwork, edge_means: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if edge_means.len() != net.edge_count() || edge_means.iter().any(|s| s.len() != net.dim()) {
        return Err(Error::dims("one oriented mean of the network dimension per edge"));
    }
    let mut rhs = vec![DVector::zeros(net.dim()); net.node_count()];
    for (e, s) in net.edges().iter().zip(edge_means) {
        let w = e.precision() * s;
        rhs[e.b] += &w;
        rhs[e.a] -= &w;
    }
    solve_reduced(net, &rhs)
}

/// Fixed point of the Jacobi sweep for a frozen `σ`: `L̃ x = −σ̃`.
pub fn fixed_point(net: &SensorNetwork, sigma: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if sigma.len() != net.node_count() {
        return Err(Error::dims("one σ per node"));
    }
    let rhs: Vec<_> = sigma.iter().map(|s| -s).collect();
    solve_reduced(net, &rhs)
}

/// Stacked error `e = x̃ − x̂` over nodes `1..n`.
pub fn stacked_error(truth: &[DVector<f64>], state: &LocalizationState) -> DVector<f64> {
    linalg::stack(&truth[1..]) - state.reduced()
}

/// One step of the error recursion `e' = D̃⁻¹ Ã e − D̃⁻¹ R̃ᵀ ℰ⁻¹ u`, where `u`
/// is the stacked running mean of the oriented edge noise.
pub fn error_recursion(
    net: &SensorNetwork,
    lap: &LaplacianSet,
    e: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let rhs = &lap.reduced_adjacency * e - lap.reduced_incidence_map.transpose() * (lap.edge_precision(net) * u);
    lap.reduced_degree
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularMatrix)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationDiagnostics {
    /// `x_i − x_0` for every node.
    pub truth: Vec<DVector<f64>>,
    /// `‖e(t)‖` for `t = 0..=T`.
    pub error_norms: Vec<f64>,
    /// Running mean of the oriented edge noise after the last round.
    pub noise_mean: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRun {
    pub state: LocalizationState,
    pub diagnostics: LocalizationDiagnostics,
}

/// Run `rounds` rounds of relative sensing and Jacobi updates from `initial`.
/// `observer(t, state)` sees every state, `t = 0..=rounds`.
pub fn run_localization<R, F>(
    net: &SensorNetwork,
    initial: LocalizationState,
    rounds: usize,
    options: JacobiOptions,
    rng: &mut R,
    mut observer: F,
) -> Result<LocalizationRun>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &LocalizationState),
{
    ensure_connected(net)?;
    let loc = Localizer::new(net, options)?;
    let truth = net.relative_positions();
    let mut noise = EdgeAverager::new(net);
    let mut state = initial;
    let mut error_norms = vec![stacked_error(&truth, &state).norm()];
    observer(0, &state);
    for t in 0..rounds {
        let round = crate::models::sample_round(net, t, rng);
        noise.add(net, &round)?;
        state = loc.step(net, &state, &round)?;
        error_norms.push(stacked_error(&truth, &state).norm());
        observer(t + 1, &state);
    }
    let noise_mean = noise
        .means()
        .into_iter()
        .zip(net.edges())
        .map(|(s, e)| s - (net.position(e.b) - net.position(e.a)))
        .collect();
    Ok(LocalizationRun {
        state,
        diagnostics: LocalizationDiagnostics { truth, error_norms, noise_mean },
    })
}
