use thiserror::Error;

use crate::sparsegrid::AdaptiveState;

/// Failure modes shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("the prescribed first column must be nonzero")]
    ZeroVector,

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature order {0} is outside 1..=200")]
    OrderOutOfRange(usize),

    #[error("Laguerre parameter alpha = {0} must exceed -1")]
    AlphaOutOfRange(f64),

    #[error("integrand returned {value} at node {node:?}")]
    NonFiniteIntegrand { node: Vec<f64>, value: f64 },

    #[error("evaluation budget of {max_evals} exhausted with eta = {:e}", state.eta)]
    BudgetExhausted {
        max_evals: usize,
        state: Box<AdaptiveState>,
    },

    #[error("argument {what} = {value} is outside the admissible domain")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("drift correction undefined for asset {asset}: log argument {argument} <= 0")]
    OmegaUndefined { asset: usize, argument: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Configuration problems as opposed to numerical failures; the CLI maps
    /// these to different exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::ConfigInvalid(_) | Error::FileNotFound(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
