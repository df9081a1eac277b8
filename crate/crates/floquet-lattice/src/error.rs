use std::io;
use std::path::PathBuf;

use floquet_lattice_core::experiments::ScanError;
use floquet_lattice_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Scan(#[from] ScanError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        let numerical = match self {
            AppError::Core(e) => e.is_numerical(),
            AppError::Scan(e) => e.cause().is_numerical(),
            _ => false,
        };
        if numerical {
            2
        } else {
            1
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
