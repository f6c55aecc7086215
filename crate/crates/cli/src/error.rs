use std::path::{Path, PathBuf};

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("cannot write {path}: {source}")]
    UnwritablePath { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] obsdet_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn unwritable(path: &Path, source: std::io::Error) -> Self {
        CliError::UnwritablePath { path: path.to_path_buf(), source }
    }
}
