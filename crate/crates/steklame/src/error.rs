use std::path::PathBuf;

use steklame_core::Error as CoreError;

/// Errors surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for numerical failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if is_numerical(e) => 1,
            CliError::Io { .. } | CliError::Csv(_) => 1,
            _ => 2,
        }
    }

    /// Extra guidance printed after the message.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(CoreError::InsufficientResolution { .. }) => {
                Some("raise the source count N, or loosen residual_tol")
            }
            CliError::Core(CoreError::InvalidOffset { .. }) => Some("reduce the source offset alpha"),
            _ => None,
        }
    }
}

fn is_numerical(e: &CoreError) -> bool {
    !matches!(
        e,
        CoreError::InvalidParameters { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::SelfIntersection { .. }
            | CoreError::Orientation(_)
            | CoreError::OriginNotInterior { .. }
            | CoreError::NotConvex { .. }
            | CoreError::InvalidOffset { .. }
            | CoreError::SingularParametrization { .. }
    )
}

pub type Result<T> = std::result::Result<T, CliError>;
