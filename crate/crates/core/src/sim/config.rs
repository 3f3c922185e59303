//! Scenario files.
//!
//! A scenario is a TOML document with a few top-level keys and one table per
//! concern. Unknown keys are rejected so that typos surface as config errors.
//!
//! ```toml
//! kind = "localization-only"
//! horizon = 20
//! replicates = 50
//! seed = 7
//!
//! [network]
//! generator = "random_geometric_edges"
//! nodes = 300
//! edges = 1288
//! side = 100.0
//!
//! [localization]
//! init = { kind = "prior", std = 5.0 }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::localization::{EdgeCombination, FoldOrder, Initialization, JacobiOptions};
use crate::models::FieldInterpolation;
use crate::network::WeightRule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    StaticField,
    Tracking,
    LocalizationOnly,
    Joint,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::StaticField => "static-field",
            ScenarioKind::Tracking => "tracking",
            ScenarioKind::LocalizationOnly => "localization-only",
            ScenarioKind::Joint => "joint",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    #[default]
    RandomGeometric,
    /// Random geometric layout with a prescribed edge count.
    RandomGeometricEdges,
    ErdosRenyi,
    Path,
    /// Positions and edges given inline or in files.
    EdgeList,
    /// Sensors placed on the `[field]` grid and linked within `radius`.
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeNoise {
    /// `ℰ = edge_std² I` on every edge.
    #[default]
    Isotropic,
    /// Random SPD covariances with eigenvalues in `edge_eig`.
    RandomSpd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default)]
    pub generator: Generator,
    #[serde(default)]
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_side")]
    pub side: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// 1-based pairs, for the `edge_list` generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_pairs: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    /// Edge-list file (1-based `i j` per line), relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_file: Option<PathBuf>,
    /// One position per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_file: Option<PathBuf>,
    /// `i j` followed by the row-major covariance entries, per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_file: Option<PathBuf>,
    #[serde(default)]
    pub edge_noise: EdgeNoise,
    #[serde(default = "default_edge_std")]
    pub edge_std: f64,
    #[serde(default = "default_edge_eig")]
    pub edge_eig: [f64; 2],
    #[serde(default)]
    pub weights: WeightRule,
    /// Draw a fresh network in every replicate instead of one shared network.
    #[serde(default)]
    pub resample: bool,
}

fn default_side() -> f64 {
    100.0
}
fn default_spacing() -> f64 {
    1.0
}
fn default_edge_std() -> f64 {
    0.5
}
fn default_edge_eig() -> [f64; 2] {
    [0.1, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSection {
    #[serde(default)]
    pub init: Initialization,
    #[serde(default)]
    pub order: FoldOrder,
    #[serde(default)]
    pub combination: EdgeCombination,
}

impl LocalizationSection {
    pub fn jacobi(&self) -> JacobiOptions {
        JacobiOptions { order: self.order, combination: self.combination }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticModel {
    /// One random unit row `h_i` per sensor, `z_i = h_i y + v`.
    #[default]
    RankOne,
    /// Point samples of the gridded field described in `[field]`.
    Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticTargetSection {
    #[serde(default)]
    pub model: StaticModel,
    #[serde(default = "default_static_dim")]
    pub dim: usize,
    #[serde(default = "one")]
    pub noise_std: f64,
    /// The target is drawn once as `N(0, state_std² I)`.
    #[serde(default = "one")]
    pub state_std: f64,
    #[serde(default = "default_eps")]
    pub prior_eps: f64,
}

impl Default for StaticTargetSection {
    fn default() -> Self {
        Self {
            model: StaticModel::default(),
            dim: default_static_dim(),
            noise_std: 1.0,
            state_std: 1.0,
            prior_eps: default_eps(),
        }
    }
}

fn default_static_dim() -> usize {
    4
}
fn one() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    crate::estimation::DEFAULT_PRIOR_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingSection {
    #[serde(default = "default_targets")]
    pub targets: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_sigma_range")]
    pub sigma_range: f64,
    #[serde(default = "default_sigma_bearing")]
    pub sigma_bearing: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Initial target states are `N(0, diag(pos², pos², vel², vel²))`, which
    /// is also every sensor's prior.
    #[serde(default = "default_init_pos")]
    pub init_position_std: f64,
    #[serde(default = "one")]
    pub init_velocity_std: f64,
}

impl Default for TrackingSection {
    fn default() -> Self {
        Self {
            targets: default_targets(),
            tau: default_tau(),
            q: default_q(),
            sigma_range: default_sigma_range(),
            sigma_bearing: default_sigma_bearing(),
            alpha: default_alpha(),
            init_position_std: default_init_pos(),
            init_velocity_std: 1.0,
        }
    }
}

fn default_targets() -> usize {
    10
}
fn default_tau() -> f64 {
    0.5
}
fn default_q() -> f64 {
    0.1
}
fn default_sigma_range() -> f64 {
    0.5
}
fn default_sigma_bearing() -> f64 {
    0.01
}
fn default_alpha() -> f64 {
    0.05
}
fn default_init_pos() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// On cell boundaries, one sensor per cell first.
    #[default]
    Boundary,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "default_cells")]
    pub nx: usize,
    #[serde(default = "default_cells")]
    pub ny: usize,
    #[serde(default = "default_cell")]
    pub cell: f64,
    #[serde(default = "default_field_mean")]
    pub mean: f64,
    #[serde(default = "one")]
    pub std: f64,
    #[serde(default = "default_cell")]
    pub corr_len: f64,
    #[serde(default)]
    pub interpolation: FieldInterpolation,
    #[serde(default = "default_field_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub placement: Placement,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            nx: default_cells(),
            ny: default_cells(),
            cell: default_cell(),
            mean: default_field_mean(),
            std: 1.0,
            corr_len: default_cell(),
            interpolation: FieldInterpolation::default(),
            noise_std: default_field_noise(),
            placement: Placement::default(),
        }
    }
}

fn default_cells() -> usize {
    4
}
fn default_cell() -> f64 {
    10.0
}
fn default_field_mean() -> f64 {
    5.0
}
fn default_field_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for JointSection {
    fn default() -> Self {
        Self { delta: default_delta() }
    }
}

fn default_delta() -> f64 {
    crate::joint::DEFAULT_DELTA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Per-round state CSV of the first replicate.
    #[serde(default)]
    pub state_dump: bool,
    /// Relative-measurement trace of the first replicate.
    #[serde(default)]
    pub trace_dump: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub horizon: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Record metrics every this many rounds (the last round always).
    #[serde(default = "default_stride")]
    pub record_every: usize,
    pub network: NetworkSection,
    #[serde(default)]
    pub localization: LocalizationSection,
    #[serde(default)]
    pub static_target: StaticTargetSection,
    #[serde(default)]
    pub tracking: TrackingSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub joint: JointSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_replicates() -> usize {
    1
}
fn default_stride() -> usize {
    1
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_config(e))))?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Canonical TOML rendering of the parsed scenario.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unprintable scenario: {e}\n"))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        let net = &self.network;
        match net.generator {
            Generator::RandomGeometric if net.radius.is_none() => {
                return bad("network.radius is required for random_geometric".into())
            }
            Generator::RandomGeometricEdges if net.edges.is_none() => {
                return bad("network.edges is required for random_geometric_edges".into())
            }
            Generator::ErdosRenyi if net.probability.is_none() => {
                return bad("network.probability is required for erdos_renyi".into())
            }
            Generator::Field if net.radius.is_none() => {
                return bad("network.radius is required for the field generator".into())
            }
            Generator::EdgeList => {
                if net.edge_pairs.is_none() && net.edge_file.is_none() {
                    return bad("edge_list needs network.edge_pairs or network.edge_file".into());
                }
                if net.positions.is_none() && net.position_file.is_none() {
                    return bad("edge_list needs network.positions or network.position_file".into());
                }
            }
            _ => {}
        }
        if net.generator != Generator::EdgeList && net.nodes == 0 {
            return bad("network.nodes must be at least 1".into());
        }
        if !(net.edge_std > 0.0) {
            return bad(format!("network.edge_std must be positive, got {}", net.edge_std));
        }
        let [lo, hi] = net.edge_eig;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("network.edge_eig must satisfy 0 < min <= max, got [{lo}, {hi}]"));
        }
        if let Initialization::Prior { std } = self.localization.init {
            if !(std >= 0.0) {
                return bad(format!("localization.init.std must be nonnegative, got {std}"));
            }
        }
        let needs_field = matches!(self.kind, ScenarioKind::Joint)
            || (self.kind == ScenarioKind::StaticField && self.static_target.model == StaticModel::Field)
            || net.generator == Generator::Field;
        if needs_field {
            let f = &self.field;
            if f.nx == 0 || f.ny == 0 || !(f.cell > 0.0) || !(f.noise_std > 0.0) || !(f.std >= 0.0) {
                return bad("field needs nx, ny >= 1 and positive cell and noise_std".into());
            }
        }
        match self.kind {
            ScenarioKind::StaticField => {
                let s = &self.static_target;
                if s.model == StaticModel::RankOne && s.dim == 0 {
                    return bad("static_target.dim must be at least 1".into());
                }
                if !(s.noise_std > 0.0) {
                    return bad("static_target.noise_std must be positive".into());
                }
            }
            ScenarioKind::Tracking => {
                let t = &self.tracking;
                if t.targets == 0 {
                    return bad("tracking.targets must be at least 1".into());
                }
                if !(t.tau > 0.0) || !(t.q >= 0.0) {
                    return bad("tracking needs tau > 0 and q >= 0".into());
                }
                crate::models::RangeBearingParams::new(t.sigma_range, t.sigma_bearing, t.alpha)
                    .map_err(|e| Error::Config(format!("tracking: {e}")))?;
                if !(t.init_position_std > 0.0 && t.init_velocity_std > 0.0) {
                    return bad("tracking initial stds must be positive".into());
                }
            }
            ScenarioKind::Joint => {
                if !(self.joint.delta > 0.0) {
                    return bad(format!("joint.delta must be positive, got {}", self.joint.delta));
                }
            }
            ScenarioKind::LocalizationOnly => {}
        }
        Ok(())
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "localization-only"
horizon = 3
[network]
generator = "path"
nodes = 4
"#;

    #[test]
    fn parses_minimal_with_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.kind, ScenarioKind::LocalizationOnly);
        assert_eq!(s.replicates, 1);
        assert_eq!(s.joint.delta, 0.05);
        assert_eq!(s.localization.init, Initialization::Zeros);
        assert_eq!(s.name(), "localization-only");
    }

    #[test]
    fn echo_round_trips() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let again = Scenario::from_toml_str(&s.echo()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let typo = MINIMAL.replace("nodes", "nodez");
        assert!(matches!(Scenario::from_toml_str(&typo), Err(Error::Config(_))));
        let zero = MINIMAL.replace("horizon = 3", "horizon = 0");
        assert!(matches!(Scenario::from_toml_str(&zero), Err(Error::Config(_))));
        let no_radius = MINIMAL.replace("\"path\"", "\"random_geometric\"");
        assert!(matches!(Scenario::from_toml_str(&no_radius), Err(Error::Config(_))));
    }

    #[test]
    fn prior_init_table() {
        let text = format!("{MINIMAL}\n[localization]\ninit = {{ kind = \"prior\", std = 5.0 }}\n");
        let s = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(s.localization.init, Initialization::Prior { std: 5.0 });
    }

    #[test]
    fn missing_file_names_path() {
        let e = Scenario::load(Path::new("/nonexistent/dir/x.toml")).unwrap_err();
        assert!(e.is_config());
        assert!(e.to_string().contains("/nonexistent/dir/x.toml"));
    }
}
