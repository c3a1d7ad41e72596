use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },

    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("invalid parameter: {0}")]
    Core(#[from] entropix_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for anything wrong with the config text, 3 for bad parameter values.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::UnknownKey { .. } | CliError::ConfigRead { .. } => 2,
            CliError::Invalid(_) | CliError::Core(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
