use std::io;
use std::path::PathBuf;

use bapg_core::GwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: GwError,
    },
    #[error(transparent)]
    Core(#[from] GwError),
    #[error("could not serialize the report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} self-test check(s) failed")]
    SelfTest { failed: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for anything the user can fix by changing the invocation or its
    /// inputs, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Graph { .. } => 2,
            CliError::Core(e) => match e {
                GwError::Parameter(_)
                | GwError::Input(_)
                | GwError::Parse { .. }
                | GwError::OutOfRange { .. }
                | GwError::Shape { .. }
                | GwError::Init(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Json(_) | CliError::SelfTest { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
