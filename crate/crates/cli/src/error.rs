use std::path::PathBuf;

use qkl_tomo::TomoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Tomo(#[from] TomoError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("nothing to plot")]
    EmptyPlot,
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Csv { path, source }
}
