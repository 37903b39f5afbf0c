use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation
    /// (non-finite coordinate, width with non-positive real part, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates the documented contract of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A propagation step produced non-finite packet fields.
    #[error("numerical failure at step {step}: {reason}")]
    NumericalFailure { step: usize, reason: String },

    /// Every direction of an overlap matrix fell below the significance cutoff,
    /// or the matrix is singular beyond filtering.
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    /// An assembled operator matrix failed its Hermiticity check.
    #[error("matrix not Hermitian: defect {0:e}")]
    NonHermitian(f64),

    /// A wave packet is not negligible at the edge of the spatial grid.
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// Grid propagation drifted in norm, signalling an unstable time step.
    #[error("unstable time step: {0}")]
    StepSize(String),

    /// Imaginary-time decay drove the norm below the representable range.
    #[error("imaginary-time decay underflow: norm {0:e}")]
    DecayUnderflow(f64),

    /// The double well admits no self-consistent stationary Gaussian.
    #[error("no stationary Gaussian: {0}")]
    NoStationarySolution(String),

    /// The potential has no barrier between the turning points.
    #[error("no instanton: {0}")]
    NoInstanton(String),
}

pub type Result<T> = std::result::Result<T, Error>;
