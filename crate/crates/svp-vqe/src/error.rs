use std::path::PathBuf;

use svp_vqe_core::Error as CoreError;

/// Errors of the CLI and file layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for bad parameters or inputs, 3 for budget and
    /// infeasibility failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(CoreError::Budget(_) | CoreError::InfeasibleRadius { .. } | CoreError::TooManyQubits { .. }) => 3,
            Error::Core(_) | Error::Parse(_) | Error::Json(_) | Error::Parameter(_) => 2,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
