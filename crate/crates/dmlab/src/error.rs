use dmlab_core::Error as CoreError;
use thiserror::Error;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    /// Attaches a stage name to a core error, sorting it into usage or
    /// numerical failure.
    pub fn core(stage: &str, e: CoreError) -> Self {
        let msg = format!("{stage}: {e}");
        match e {
            CoreError::NoConvergence { .. }
            | CoreError::Collapse
            | CoreError::Unstable(_)
            | CoreError::WeightOverflow
            | CoreError::ZeroField
            | CoreError::NearSingular(_)
            | CoreError::TooFewPoints(..) => CliError::Numerical(msg),
            _ => CliError::Usage(msg),
        }
    }
}

pub trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, CoreError> {
    fn stage(self, name: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::core(name, e))
    }
}
