use std::io;

use thiserror::Error;

/// Errors raised anywhere in the audit pipeline.
#[derive(Debug, Error)]
pub enum UbeError {
    /// Malformed embedding or dataset file. `line` is 1-based when known.
    #[error("format error{}: {message}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    #[error("truncated file: incomplete record starting at byte offset {offset}")]
    TruncatedFile { offset: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown token: {0:?}")]
    UnknownToken(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    /// Wraps an upstream error with the pipeline stage it came from.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<UbeError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl UbeError {
    pub(crate) fn format(line: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        UbeError::Format {
            line: line.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        UbeError::Config(message.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        UbeError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage wrappers removed.
    pub fn root(&self) -> &UbeError {
        match self {
            UbeError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = UbeError> = std::result::Result<T, E>;
