use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// The variants map onto the command-line exit codes: domain-like errors
/// (`Domain`, `DegenerateCurve`, `Planning`) are caller mistakes, `Io`,
/// `Format` and `Json` are problems with files, and `Convergence` means the
/// linear solver could not hit its residual target.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("invalid artifact: {0}")]
    Json(#[from] serde_json::Error),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("video has no measurable semantic change (progress range {range:e})")]
    DegenerateCurve { range: f64 },

    #[error("{0}")]
    Planning(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Format(err.to_string())
        }
    }
}
