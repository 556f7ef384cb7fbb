use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV schema mismatch: {0}")]
    Schema(String),
    #[error("{0} acceptance check(s) failed")]
    CheckFailed(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for I/O, 1 for a failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::Io { .. } => 3,
            CliError::CheckFailed(_) => 1,
        }
    }
}

impl From<moran_core::Error> for CliError {
    fn from(e: moran_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
