use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown gate '{0}' (known: identity, cnot, swap, cz, iswap, sqrt-swap, canonical, depolarizing, product)")]
    UnknownGate(String),
    #[error("bad parameters for '{gate}': {reason}")]
    BadParameters { gate: String, reason: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Validation(#[from] qst_core::Error),
    #[error("{0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for validation or mismatch failures, 2 for usage and parse errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Check(_) => 1,
            CliError::Usage(_)
            | CliError::UnknownGate(_)
            | CliError::BadParameters { .. }
            | CliError::Parse { .. }
            | CliError::Io(_) => 2,
        }
    }
}
