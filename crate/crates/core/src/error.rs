//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
///
/// Construction of the core domain types is where most validation happens;
/// operations on already-constructed types can only fail for the reasons
/// listed on each operation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("time series needs at least 2 samples, got {0}")]
    SeriesTooShort(usize),

    #[error("sample {index} is not finite ({value})")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("sample spacing must be positive and finite, got {0}")]
    NonPositiveDt(f64),

    #[error("spectrum bin {0} is not finite")]
    NonFiniteBin(usize),

    #[error(
        "length {len} is not a power of two; accepted lengths are 2, 4, 8, ... — \
         use LengthPolicy::ZeroPad to pad up to {next} or LengthPolicy::Truncate \
         to cut down to {prev}"
    )]
    NotPowerOfTwo {
        len: usize,
        next: usize,
        prev: usize,
    },

    /// A named parameter constraint was violated.
    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("spectrum list is empty")]
    EmptySpectra,

    #[error(
        "spectra have mismatched lengths: expected {expected}, got {got} at position {position}"
    )]
    MismatchedLengths {
        expected: usize,
        got: usize,
        position: usize,
    },

    #[error("bin pair ({ka}, {kb}) is outside the principal domain for length {n}")]
    OutsideDomain { ka: usize, kb: usize, n: usize },

    #[error("no phase information at ({ka}, {kb}): accumulator magnitude below 1e-12")]
    NoPhaseInformation { ka: usize, kb: usize },

    #[error("all bicoherence cells are invalid (every denominator sits below the power floor)")]
    AllCellsInvalid,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("tick data contains no rows")]
    EmptyTicks,

    #[error("session {session}: {message}")]
    Session { session: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
