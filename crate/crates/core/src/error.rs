use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GnlError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GnlError {
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    Shape {
        context: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("index {index} out of range for {len} nodes")]
    Index { index: usize, len: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation produced a non-finite value: {0}")]
    Evaluation(String),

    #[error("{path}: line {line}, column {column}: {message}")]
    Load {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("normalization error: node `{node}` has zero standard deviation on the fit range")]
    Normalization { node: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("training diverged at epoch {epoch}, window {window}: {message}")]
    Training {
        epoch: usize,
        window: usize,
        message: String,
    },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GnlError {
    pub(crate) fn shape(context: impl Into<String>, left: &[usize], right: &[usize]) -> Self {
        GnlError::Shape {
            context: context.into(),
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GnlError::Io {
            path: path.into(),
            source,
        }
    }
}
