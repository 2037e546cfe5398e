//! Deterministic simulation lab for congestion control over an intermittently
//! connected multi-hop relay chain.
//!
//! The lab compares three sender-side controllers: a hybrid that fuses
//! Vegas-style queue-backlog detection with an EWMA bandwidth estimate used to
//! resize the window (`ub`), plus classic Vegas and Westwood references.
//! Everything is single-threaded and reproducible: one seed fixes node
//! motion, every queue decision, and therefore every exported byte.

pub mod controller;
pub mod estimator;
pub mod harness;
pub mod mobility;
pub mod netsim;
pub mod rng;
pub mod units;

use std::path::PathBuf;

/// Errors surfaced to callers. Programmer-level contract violations
/// (scheduling into the past, malformed thresholds) panic instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
