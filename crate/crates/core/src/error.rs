use thiserror::Error;

use crate::ubb::UbbFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not unitary (deficit {deficit:.3e}, tolerance {tol:.1e})")]
    NotUnitary { deficit: f64, tol: f64 },

    #[error(
        "{what} did not converge after {iterations} iterations (final residual {residual:.3e})"
    )]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("degenerate landscape: every seed stalled at zero overlap ({0})")]
    DegenerateLandscape(String),

    #[error(transparent)]
    Ubb(Box<UbbFailure>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative method, as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::DegenerateLandscape(_) | Error::Ubb(_)
        )
    }
}
