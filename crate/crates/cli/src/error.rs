use iterlstm_core::Error;

/// A failed command and the exit status it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or input paths. Exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong while running. Exit status 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Errors reading user-supplied inputs (corpus, config) are usage errors.
pub fn input_error(e: Error) -> CliError {
    match e {
        Error::Io { .. } | Error::InvalidInput(_) | Error::Config(_) => CliError::Usage(e.to_string()),
        other => other.into(),
    }
}
