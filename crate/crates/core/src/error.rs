//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its admissible range (non-finite input,
    /// negative step width, empty active set, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two pixels or images with different (m, n) signatures were combined.
    #[error("signature mismatch: ({0}, {1}) vs ({2}, {3})")]
    SignatureMismatch(usize, usize, usize, usize),

    /// Matrix/vector/image dimensions do not fit together.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A problem size exceeded the limits of a brute-force oracle.
    #[error("oracle size limit exceeded: {0}")]
    OracleLimit(String),

    /// The noiseless-inpainting constraint x = f on the observed pixels is
    /// violated; reports the first offending pixel.
    #[error("constraint violated at pixel ({0}, {1})")]
    ConstraintViolation(usize, usize),

    /// A solver or command configuration that cannot be run (e.g. denoising
    /// with a nonempty mask, or a fully masked image).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// The covering graph of a diagnostic is disconnected.
    #[error("covering graph is disconnected")]
    DisconnectedCovering,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
