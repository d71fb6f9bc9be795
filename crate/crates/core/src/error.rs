use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("narrow-band violation: d_nu/nu = {ratio} exceeds 0.01")]
    NarrowBand { ratio: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("entropy is not concave at the working point (second derivative {0})")]
    Curvature(f64),

    #[error("time-scale separation violated: {0}")]
    Separation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tensor dimension {dim} exceeds budget {budget}")]
    Size { dim: usize, budget: usize },

    #[error("truncation leakage {leakage:e} exceeds bound {bound:e}; raise the cutoff")]
    Leakage { leakage: f64, bound: f64 },

    #[error("occupancy vector violates constraints: {0}")]
    Invariant(String),

    #[error("enumeration budget exceeded: {count} partitions > {budget}")]
    Budget { count: u128, budget: u128 },

    #[error("exclusion violated: {quanta} quanta cannot fit singly into {receptacles} receptacles")]
    Exclusion { quanta: u64, receptacles: u64 },

    #[error("all transition rates vanish; the state is frozen")]
    Frozen,

    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
