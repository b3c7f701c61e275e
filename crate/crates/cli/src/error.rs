use std::fmt;

use edgemem::harness::ExperimentError;
use edgemem::memory::StoreError;
use edgemem::regen::RegenError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unusable input; nothing was written.
    Invalid(String),
    /// The generation backend failed or was unreachable.
    Backend(String),
    /// A store failed verification.
    Corrupt(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Corrupt(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m)
            | CliError::Backend(m)
            | CliError::Corrupt(m)
            | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub fn invalid(m: impl fmt::Display) -> CliError {
    CliError::Invalid(m.to_string())
}

pub fn other(m: impl fmt::Display) -> CliError {
    CliError::Other(m.to_string())
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Other(e.to_string()),
            _ => CliError::Corrupt(e.to_string()),
        }
    }
}

impl From<RegenError> for CliError {
    fn from(e: RegenError) -> Self {
        match e {
            RegenError::InvalidRequest(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Plan(_) | ExperimentError::Ledger(_) => {
                CliError::Invalid(e.to_string())
            }
            ExperimentError::Regen { source, phase } => {
                CliError::Backend(format!("phase {phase}: {source}"))
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}
