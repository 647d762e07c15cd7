use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// `A + B` is numerically singular, so `ker A ∩ ker B` is not trivial and
    /// the pencil `(A, B)` is not definite as a pair.
    #[error("pencil is not definite: ker A and ker B intersect nontrivially (A+B pivot {pivot} = {value:e})")]
    KernelIntersection { pivot: usize, value: f64 },

    #[error("eigensolver did not converge: {converged} of {requested} pairs after {iterations} block steps")]
    EigenNotConverged {
        converged: usize,
        requested: usize,
        iterations: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("CG breakdown at iteration {iteration}: p^T A p = {curvature:e} (operator not SPD)")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("subdomain {subdomain}: {source}")]
    Subdomain {
        subdomain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub(crate) fn in_subdomain(self, subdomain: usize) -> Error {
        Error::Subdomain {
            subdomain,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
