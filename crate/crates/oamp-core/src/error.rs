//! Error type shared by the core modules.

use alloc::string::String;
use core::fmt;

/// Errors from the algorithmic core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operand shapes do not agree. The message names the operation and dims.
    DimensionMismatch(String),
    /// A matrix expected to be symmetric positive-definite was not.
    SingularSystem,
    /// Matrix handed to the SPD solver is not symmetric within tolerance.
    NotSymmetric,
    /// tr(W H) collapsed, so the OAMP normalization is undefined.
    DegenerateNormalization,
    /// Brute-force ML would enumerate more than the configured candidate cap.
    SearchSpaceTooLarge { candidates: u64, cap: u64 },
    /// Constellation order outside the supported set.
    UnsupportedOrder(usize),
    /// Symbol index points outside the constellation.
    SymbolIndexOutOfRange { index: usize, order: usize },
    /// Correlation coefficient outside [0, 1).
    CorrelationOutOfRange(f64),
    /// A tensor shape does not match what the model expects.
    ShapeMismatch(String),
    /// Training loss became non-finite.
    NonFiniteLoss { epoch: usize, batch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::SingularSystem => write!(f, "singular system"),
            Error::NotSymmetric => write!(f, "matrix is not symmetric"),
            Error::DegenerateNormalization => {
                write!(f, "tr(WH) is not positive; cannot normalize W")
            }
            Error::SearchSpaceTooLarge { candidates, cap } => {
                write!(f, "ML search space {candidates} exceeds cap {cap}")
            }
            Error::UnsupportedOrder(n) => write!(f, "unsupported constellation order {n}"),
            Error::SymbolIndexOutOfRange { index, order } => {
                write!(f, "symbol index {index} out of range for order {order}")
            }
            Error::CorrelationOutOfRange(c) => {
                write!(f, "correlation coefficient {c} outside [0, 1)")
            }
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
