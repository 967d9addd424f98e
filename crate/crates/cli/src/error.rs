use std::path::Path;

use lfkit_core::config::ConfigError;
use lfkit_core::image_io::ImageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Validation(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message, keeping the category.
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{prefix}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{prefix}: {m}")),
            CliError::Validation(m) => CliError::Validation(format!("{prefix}: {m}")),
        }
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::NotFound(_) | ImageError::Io(_) | ImageError::Png(_) => CliError::Io(e.to_string()),
            ImageError::Exr { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}
