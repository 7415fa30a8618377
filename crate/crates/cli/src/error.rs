use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Numeric(#[from] sdestab_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input (including arguments the core rejects up front), 2
    /// for failures while running.
    pub fn exit_code(&self) -> u8 {
        use sdestab_core::Error;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Numeric(Error::Config(_) | Error::Domain(_)) => 1,
            CliError::Numeric(_) | CliError::Io { .. } => 2,
        }
    }
}
