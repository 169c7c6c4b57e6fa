use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One failed check, named by its dotted config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(key: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { key: key.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<ConfigIssue>),
    #[error(transparent)]
    Run(#[from] gravdeco::Error),
    #[error("cannot serialize results: {0}")]
    Serialize(String),
}

fn list(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

/// Process exit statuses, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const INVALID_CONFIG: i32 = 5;
    pub const SERIALIZE: i32 = 6;
    /// Non-finite values, norm drift, under-resolved packets.
    pub const NUMERICAL: i32 = 10;
    /// Support leakage or too small a displacement in the hole run.
    pub const SUPPORT: i32 = 11;
    /// Non-invertible diffeomorphism or non-Lorentzian metric.
    pub const GEOMETRY: i32 = 12;
    /// Degenerate form, invalid measure, underdetermined fit.
    pub const LINEAR_ALGEBRA: i32 = 13;
    /// Remaining domain and shape errors.
    pub const DOMAIN: i32 = 14;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use gravdeco::Error as E;
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Io { .. } => exit::IO,
            Self::Parse { .. } | Self::Format { .. } => exit::PARSE,
            Self::Invalid(_) => exit::INVALID_CONFIG,
            Self::Serialize(_) => exit::SERIALIZE,
            Self::Run(e) => match e {
                E::NumericalBlowup(_) | E::NormViolation(_) | E::Resolution(_) | E::ZeroNorm => exit::NUMERICAL,
                E::SupportViolation(_) | E::InsufficientDisplacement(_) => exit::SUPPORT,
                E::NonInvertibleDiffeo(_) | E::Signature { .. } => exit::GEOMETRY,
                E::DegenerateForm { .. } | E::InvalidMeasure(_) | E::UnderdeterminedFit(_) => exit::LINEAR_ALGEBRA,
                E::GridMismatch(_)
                | E::InvalidGrid(_)
                | E::Domain(_)
                | E::TimeOutOfRange { .. }
                | E::DimensionMismatch(_) => exit::DOMAIN,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
