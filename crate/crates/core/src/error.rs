//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Medium or configuration violates a structural hypothesis.
    #[error("validation error: {0}")]
    Validation(String),
    /// Linear solve or eigensolve failed or was too ill-conditioned.
    #[error("solver error: {0}")]
    Solver(String),
    /// The fundamental eigenpair could not be isolated.
    #[error("extraction error: {0}")]
    Extraction(String),
    /// Zero-flux (or irregular) frequency: no outgoing selection rule applies.
    #[error("zero-flux frequency: {0}")]
    ZeroFlux(String),
    /// A periodic function has a zero sample, so its winding number is undefined.
    #[error("winding number undefined: {0}")]
    Winding(String),
    /// RtR coefficient at the pole of the RtR to DtN map.
    #[error("singular impedance: {0}")]
    SingularImpedance(String),
    /// The brute-force oracle refuses the request.
    #[error("oracle refused: {0}")]
    OracleRefused(String),
    /// Shape mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Input/output failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// Configuration parse failure.
    #[error("config error: {0}")]
    Config(String),
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
