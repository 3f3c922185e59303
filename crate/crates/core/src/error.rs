use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),

    #[error("node index {index} out of range for a network of {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },

    #[error("covariance of edge {{{0}, {1}}} is not symmetric positive definite")]
    NonSpdCovariance(usize, usize),

    #[error("communication graph is not connected; a connected graph is required")]
    DisconnectedGraph,

    #[error("weight matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("weight matrix is not primitive (irreducible and aperiodic)")]
    NotPrimitive,

    #[error("parameter `{name}` is out of range: {value}")]
    NonPositiveParam { name: &'static str, value: f64 },

    #[error("covariance matrix is not symmetric positive semidefinite")]
    NotPsd,

    #[error("target position coincides with the sensor position")]
    CoincidentTargetSensor,

    #[error("{{{0}, {1}}} is not an edge of the network")]
    NotAnEdge(usize, usize),

    #[error("consensus weights sum to {0}, expected 1")]
    WeightSumViolation(f64),

    #[error("observation noise covariance is not symmetric positive definite")]
    NonSpdNoise,

    #[error("information matrix is singular")]
    SingularInformation,

    #[error("predicted covariance is not invertible")]
    NonInvertiblePrediction,

    #[error("node {node} has no relative measurement about neighbor {neighbor}")]
    MissingMeasurement { node: usize, neighbor: usize },

    #[error("degree block of node {0} is singular")]
    SingularDegreeBlock(usize),

    #[error("regularization delta must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("Jacobi iteration matrix has spectral radius {0} >= 1")]
    UnstableIteration(f64),

    #[error("rank condition violated: stacked observation matrix has rank {rank} < {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Violations of the connectivity or rank preconditions of the estimators.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::DisconnectedGraph | Error::RankDeficient { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_))
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
