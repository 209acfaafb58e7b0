use std::path::PathBuf;

/// Errors produced by the planning library and the benchmark harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("link index {index} out of range for a chain with {links} links")]
    LinkOutOfRange { index: usize, links: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown scenario id {0} (expected 1..=4)")]
    UnknownScenario(u32),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown planner `{0}` (expected one of rrt, cat_rrt, t_rrt, rrt_star, vf_rrt)")]
    UnknownPlanner(String),

    #[error("nearest-neighbour query on an empty tree")]
    EmptyTree,

    #[error("path needs at least {required} states, got {actual}")]
    PathTooShort { required: usize, actual: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
