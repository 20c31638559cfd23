use std::path::PathBuf;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("scenario is invalid:\n{0}")]
    Validation(ValidationReport),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed input file. `line` is the 1-based file line (header is line 1).
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("pair {origin} -> {destination}: {source}")]
    Pair {
        origin: String,
        destination: String,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_pair(self, origin: &str, destination: &str) -> Self {
        Error::Pair {
            origin: origin.to_string(),
            destination: destination.to_string(),
            source: Box::new(self),
        }
    }

    /// True for failures that stem from the data being unusable for a
    /// computation rather than from malformed input.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::DegenerateFit(_) => true,
            Error::Pair { source, .. } | Error::Step { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}
