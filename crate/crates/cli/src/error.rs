use std::fmt;

use hdlp::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid, unreadable or inconsistent configuration (exit 2).
    Config(String),
    /// Missing or malformed input data (exit 3).
    Data(String),
    /// Estimation or simulation failure (exit 4).
    Compute(String),
    /// File system failure while writing results (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Compute(_) | CliError::Io(_) => 4,
        }
    }

    /// Classifies a library error raised while validating a configuration.
    pub fn config(e: Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// Classifies a library error raised while running on user data.
    pub fn from_run(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::NonStationarySpec(_) | Error::NonStationaryAfterDamping(_) => {
                CliError::Config(e.to_string())
            }
            Error::UnknownColumn(_)
            | Error::NonFinite(_)
            | Error::NonAbsorbingTreatment(_)
            | Error::InsufficientSample { .. } => CliError::Data(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}
