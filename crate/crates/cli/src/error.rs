use std::fmt;

use hsnum::HsError;

/// Failures of a CLI run, each mapped to a fixed exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Clap(clap::Error),
    Core(HsError),
    Output(String),
}

impl CliError {
    /// 0 for help/version output, 1 usage, 2 parameter domain, 3 convergence,
    /// 4 anything else (I/O, malformed input data, internal consistency).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Clap(_) => 1,
            CliError::Core(HsError::Domain { .. } | HsError::Divergent { .. } | HsError::Singularity { .. }) => 2,
            CliError::Core(e) if e.is_convergence() => 3,
            CliError::Core(_) | CliError::Output(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(msg) => write!(f, "output: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<HsError> for CliError {
    fn from(e: HsError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
