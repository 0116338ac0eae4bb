use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A law without a nontrivial small-argument expansion, or one that is not
    /// of the isotropic form `c |x|^alpha`.
    #[error("expansion unavailable: {0}")]
    Expansion(String),

    /// A regime whose hypotheses are not met by the configured law/dimension.
    #[error("hypothesis violated for regime {item}: {reason}")]
    Hypothesis { item: u8, reason: String },

    #[error("window needs {required} lattice points per replicate, budget is {budget}")]
    PointBudget { required: u64, budget: u64 },

    #[error("estimated truncation tail {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    TailTolerance { estimate: f64, tolerance: f64 },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
