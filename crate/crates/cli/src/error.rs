use thiserror::Error;

use fracsim_core::SimError;
use fracsim_pcuq::UqError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation failed: {0}")]
    Solver(#[from] SimError),
    #[error("uncertainty quantification failed: {0}")]
    Uq(#[from] UqError),
    #[error("{failed} of {total} ensemble nodes failed; aggregation skipped, partial results are in {manifest}")]
    NodesFailed {
        failed: usize,
        total: usize,
        manifest: String,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for failures while computing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(SimError::Mesh(_)) => 2,
            CliError::Solver(SimError::InvalidParameter(_)) => 2,
            CliError::Solver(_) | CliError::Uq(_) | CliError::NodesFailed { .. } | CliError::Io { .. } => 3,
        }
    }
}
