use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pipe index {index} out of range for a network of {n} pipes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("head loss derivative is unbounded at q = {q}")]
    UnboundedDerivative { q: f64 },

    #[error("head loss derivative of pipe {pipe} vanishes at q = {q}")]
    ZeroDerivative { pipe: usize, q: f64 },

    #[error("data point has q_in = q_out, no leak to localize")]
    NoLeak,

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("too few data points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("all {0} points failed")]
    AllPointsFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
