use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite angle: {0}")]
    NonFiniteAngle(f64),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("requested {requested} cooperators but only {available} other UEs exist")]
    NotEnoughUes { requested: usize, available: usize },

    #[error("no base station sampled after {attempts} attempts")]
    NoBaseStation { attempts: usize },

    #[error("row timestamp {got} does not follow previous timestamp {last}")]
    NonMonotoneTimestamp { last: f64, got: f64 },

    #[error("row has {got} sectors, matrix expects {expected}")]
    RowWidthMismatch { expected: usize, got: usize },

    #[error("sensing matrix holds {rows} of {capacity} rows")]
    MatrixNotFull { rows: usize, capacity: usize },

    #[error("no active sector detected")]
    NotDetected,

    #[error("blocker coincides with sensor position")]
    BlockerAtSensor,

    #[error("sector half-width {0} rad outside (0, pi/4]")]
    HalfWidthOutOfRange(f64),

    #[error("empty bearing set")]
    EmptyBearings,

    #[error("singular fusion system (det = {det:e})")]
    SingularSystem { det: f64 },

    #[error("invalid config {key}: {message}")]
    Config { key: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than the
    /// environment (filesystem, runtime numerics).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParameter { .. }
                | Error::NotEnoughUes { .. }
                | Error::HalfWidthOutOfRange(_)
                | Error::Parse { .. }
        )
    }
}
