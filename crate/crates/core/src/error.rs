use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The Fock space for `(sites, particles)` exceeds the configured dimension cap.
    #[error("Fock space for M={sites}, N={particles} has dimension {dim}, above the cap of {cap}")]
    Capacity {
        sites: usize,
        particles: usize,
        dim: usize,
        cap: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is not normalized: sum |f|^2 = {norm}")]
    UnnormalizedKernel { norm: f64 },

    /// An invariant (trace, Hermiticity, positivity, ...) was breached during integration.
    #[error("numerical failure at step {step}: {detail}")]
    NumericalFailure { step: usize, detail: String },

    /// A hard-wall window lets too much density reach its edge.
    #[error("window too small: boundary density is {ratio:.3e} of the peak, limit {limit:.1e}")]
    WindowTooSmall { ratio: f64, limit: f64 },

    #[error("time step too large: jump probability {probability:.4} at step {step} exceeds 0.1")]
    StepTooLarge { step: usize, probability: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
