use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("duplicate segment id `{0}`")]
    DuplicateSegment(String),
    #[error("segment `{id}`: category {category} outside 1..=8")]
    BadCategory { id: String, category: i64 },
    #[error("segment `{id}`: length must be positive, got {length}")]
    NonPositiveLength { id: String, length: f64 },
    #[error("segment `{id}`: speed must be positive, got {speed}")]
    NonPositiveSpeed { id: String, speed: f64 },
    #[error("segment `{id}`: cost must be nonnegative, got {cost}")]
    NegativeCost { id: String, cost: f64 },
    #[error("segment `{id}`: dangling intersection reference")]
    DanglingIntersection { id: String },
    #[error("unknown segment id `{0}`")]
    UnknownSegment(String),

    #[error("route {route}: segments `{from}` and `{to}` are not adjacent")]
    NotAdjacent { route: usize, from: String, to: String },
    #[error("route {route}: {reason}")]
    InvalidRoute { route: usize, reason: String },
    #[error("graph has {nodes} segments, enumeration cap is {cap}")]
    EnumerationCap { nodes: usize, cap: usize },
    #[error("only {available} routes satisfy the filter, {requested} requested")]
    NotEnoughRoutes { available: usize, requested: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("route {route} cannot reach a feasible final SOC even with every segment charged")]
    InsufficientCharging { route: usize },
    #[error("node is not a boundary node of the state graph")]
    NotBoundary,
    #[error("state graph has no s-t path")]
    NoPath,

    #[error("empty route set")]
    EmptyRoutes,
    #[error("MPS name `{0}` contains whitespace")]
    MpsName(String),
    #[error("MPS parse error at line {line}: {reason}")]
    MpsParse { line: usize, reason: String },

    #[error("{candidates} candidate segments exceed the brute-force cap of {cap}")]
    CandidateCap { candidates: usize, cap: usize },
    #[error("incumbent costs {cost}, above the budget {budget}")]
    IncumbentOverBudget { cost: f64, budget: f64 },
    #[error("eigenvector centrality did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("graph has no segments")]
    EmptyGraph,
    #[error("graph has no edges")]
    NoEdges,

    #[error("unknown experiment kind `{0}`")]
    UnknownExperiment(String),
    #[error("Omega_l is empty")]
    EmptyOmega,
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
