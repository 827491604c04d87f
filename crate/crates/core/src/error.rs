use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    /// The oracle linear system had no usable pivot.
    #[error("singular linear system at column {column}")]
    SingularSystem { column: usize },

    #[error("stratification infeasible: stratum n={n} has {count} records, need at least {min}; generate a larger dataset")]
    StratificationInfeasible { n: usize, count: usize, min: usize },

    #[error("feature `{feature}` is constant over the training set")]
    ConstantFeature { feature: String },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("target values have zero variance; R^2 is undefined")]
    ZeroTargetVariance,

    #[error("unsupported {what} version {found} (expected {expected})")]
    VersionMismatch {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("dataset does not match the model: {0}")]
    DatasetMismatch(String),

    #[error("parameter count mismatch: file has {found}, architecture needs {expected}")]
    ParamCountMismatch { found: usize, expected: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 2 usage, 3 data, 4 numeric or training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 2,
            Error::StratificationInfeasible { .. }
            | Error::ConstantFeature { .. }
            | Error::VersionMismatch { .. }
            | Error::Malformed { .. }
            | Error::ParamCountMismatch { .. }
            | Error::DatasetMismatch(_)
            | Error::Io { .. } => 3,
            Error::NumericOverflow(_)
            | Error::SingularSystem { .. }
            | Error::TrainingDiverged { .. }
            | Error::ZeroTargetVariance => 4,
        }
    }
}
