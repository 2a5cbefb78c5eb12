use thiserror::Error;

/// Errors produced by the learning-control library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IlcError {
    #[error("invalid parameter `{name}`: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("horizon must contain at least one time step")]
    EmptyHorizon,

    #[error("cannot delete {deleted} rows from a horizon of {horizon} steps")]
    DegenerateDeletion { deleted: usize, horizon: usize },

    #[error("rows already deleted from this lifted system ({0})")]
    AlreadyDeleted(usize),

    #[error("matrix is rank deficient: numerical rank {rank}, need {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("system is singular: all Markov parameters vanish")]
    SingularSystem,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("geometric sum diverges: eigenvalue {eigenvalue} has modulus >= 1")]
    DivergentSum { eigenvalue: f64 },

    #[error("model iteration diverges: eigenvalue {eigenvalue} outside (-1, 1)")]
    DivergentIteration { eigenvalue: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("dB undefined for non-positive value {0}")]
    UndefinedDb(f64),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl IlcError {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        IlcError::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        IlcError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration or files rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, IlcError::Config { .. } | IlcError::Io(_))
    }
}

impl From<std::io::Error> for IlcError {
    fn from(err: std::io::Error) -> Self {
        IlcError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, IlcError>;
