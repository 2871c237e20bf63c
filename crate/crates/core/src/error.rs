use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },

    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("value out of representable range: {0}")]
    Range(String),

    #[error("ill-conditioned input: {0}")]
    Conditioning(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("{method} is not applicable: {detail}")]
    Applicability {
        method: &'static str,
        detail: String,
    },

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("spectra of A and B overlap: eigenvalues {a} and {b} are {distance:.3e} apart")]
    SpectraOverlap {
        a: Complex64,
        b: Complex64,
        distance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors that mean "the method does not apply to this input"
    /// rather than a numerical breakdown.
    pub fn is_applicability(&self) -> bool {
        matches!(
            self,
            Error::Applicability { .. } | Error::Certificate(_) | Error::SpectraOverlap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
