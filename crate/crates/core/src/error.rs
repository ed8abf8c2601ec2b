use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("basis is not orthonormal: max |gram - identity| = {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },

    #[error("band of width {width_nm} nm is under-resolved on a grid with resolution {resolution_nm} nm")]
    UnderResolved { width_nm: f64, resolution_nm: f64 },

    #[error("invalid clipping window [{lo}, {hi}]: {reason}")]
    InvalidWindow { lo: f64, hi: f64, reason: String },

    #[error("could not bracket a minimum: {0}")]
    NoBracket(String),

    #[error("pump spectrum does not overlap the grid sum-frequency range")]
    EmptyOverlap,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: max asymmetry {0:.3e}")]
    NotSymmetric(f64),

    #[error("covariance matrix is unphysical: min eigenvalue of Γ + iΩ/2 is {0:.3e}")]
    Unphysical(f64),

    #[error("basis change is not an isometry: max |UU† - I| = {0:.3e}")]
    NotIsometric(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("non-positive variance {0}")]
    NonPositiveVariance(f64),

    #[error("insufficient extrema: found {minima} minima and {maxima} maxima, need at least 2 of each")]
    InsufficientExtrema { minima: usize, maxima: usize },

    #[error("xp cross-correlation block too large ({norm:.3e} > {limit:.3e}); supermode extraction assumes it vanishes")]
    AssumptionViolated { norm: f64, limit: f64 },

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownPreset(_) | Error::Parse(_) => ErrorClass::Config,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}
