use std::path::{Path, PathBuf};

use drpkit_core::benchmarks::BenchmarkError;
use drpkit_core::coverage::CoverageError;
use drpkit_core::lensing::LensingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}:{line}: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 0 success, 1 runtime or data error, 2 usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn schema(path: &Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

impl From<CoverageError> for CliError {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::UnknownStrategy { .. } | CoverageError::InvalidArgument(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::InvalidConfig(m) => CliError::Usage(m),
            BenchmarkError::Coverage(c) => c.into(),
        }
    }
}

impl From<LensingError> for CliError {
    fn from(e: LensingError) -> Self {
        match e {
            LensingError::Config(m) | LensingError::Schedule(m) => CliError::Usage(m),
            LensingError::Coverage(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
