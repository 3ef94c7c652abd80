use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("parameter `{name}` out of range: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unbalanced marginals: source mass {source_mass}, target mass {target_mass}")]
    UnbalancedMarginals { source_mass: f64, target_mass: f64 },

    #[error("negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("potential is not 1-Lipschitz: |f({i}) - f({j})| exceeds d({i},{j}) by {excess:e}")]
    NotLipschitz { i: usize, j: usize, excess: f64 },

    #[error("pair ({x}, {y}) is outside the regime d(x,y) < r: d = {distance}, r = {r}")]
    OutOfRegime { x: usize, y: usize, distance: f64, r: f64 },

    #[error("curvature is undefined on the diagonal pair ({0}, {0})")]
    UndefinedPair(usize),

    #[error("argument {value} outside the domain of the model function: {reason}")]
    Domain { value: f64, reason: String },

    #[error("curvature lower bound {0} exceeds 1")]
    InvalidBound(f64),

    #[error("transport solver did not converge after {pivots} pivots (problem {sources}x{targets})")]
    SolverStalled { pivots: usize, sources: usize, targets: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
