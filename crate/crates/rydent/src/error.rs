//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A system size exceeded an implementation cap.
    #[error("resource limit: {what} = {requested} exceeds cap {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// An iterative eigensolver failed to reach the requested residual.
    #[error("eigensolver did not converge: best residual {best_residual:.3e} > tol {tol:.3e} after {iterations} iterations")]
    Convergence {
        best_residual: f64,
        tol: f64,
        iterations: usize,
    },

    /// Time integration drifted off the unit sphere beyond tolerance.
    #[error("integration error: norm drift {drift:.3e} exceeds tolerance {tol:.3e} at t = {time} us")]
    Integration { drift: f64, tol: f64, time: f64 },

    /// Malformed counts or geometry input.
    #[error("parse error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Parse {
        message: String,
        location: Option<String>,
    },

    /// An operation left no data to work with (e.g. truncation removed everything).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse {
            message: msg.into(),
            location: None,
        }
    }

    pub fn parse_at(msg: impl Into<String>, location: impl Into<String>) -> Self {
        Error::Parse {
            message: msg.into(),
            location: Some(location.into()),
        }
    }
}
