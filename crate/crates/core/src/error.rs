//! Crate error type.
//!
//! Dimension mismatches in matrix kernels are programmer errors and panic;
//! everything driven by user input (graph files, configuration, training
//! data) is reported through [`Error`].

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid graph data: bad edge endpoints, overlapping masks, missing
    /// labels, isolated nodes under self_loops=false, and similar.
    #[error("graph: {0}")]
    Graph(String),

    /// Invalid configuration value.
    #[error("config: {0}")]
    Config(String),

    /// A file could not be parsed; `detail` carries line/field context.
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A gradient or loss became NaN/Inf; the message names the culprit.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Training loss diverged at the given epoch.
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
