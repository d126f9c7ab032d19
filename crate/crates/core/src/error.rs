use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported spin quantum number {0}; only 1/2, 1 and 3/2 are implemented")]
    UnsupportedSpin(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("composite dimension {0} exceeds the dense cap of {cap}", cap = crate::spin::MAX_DIM)]
    DimensionCap(usize),

    #[error("site index {index} out of range for a space with {len} sites")]
    SiteIndex { index: usize, len: usize },

    #[error("operator is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not a projector (deviation {0:.3e})")]
    NotProjector(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt} ms does not resolve the fastest carrier {f_max} kHz (need dt <= {limit} ms)")]
    StepTooCoarse { dt: f64, f_max: f64, limit: f64 },

    #[error("trace drifted by {drift:.3e} at t = {t} ms")]
    TraceDrift { drift: f64, t: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
