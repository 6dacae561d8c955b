use std::fmt;
use std::process::ExitCode;

use privglm::Error;

/// A failure carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const USAGE: u8 = 2;
pub const DIVERGENCE: u8 = 3;
pub const DATA: u8 = 4;
pub const IO: u8 = 1;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: DATA, message: message.into() }
    }

    pub fn divergence(message: impl Into<String>) -> Self {
        Self { code: DIVERGENCE, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: IO, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self { code: code_of(&err), message: err.to_string() }
    }
}

fn code_of(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => DIVERGENCE,
        Error::Data { .. } | Error::Dataset(_) | Error::Csv(_) => DATA,
        Error::Io(_) => IO,
        Error::Trial { source, .. } => code_of(source),
        Error::InvalidParameter(_)
        | Error::Unsupported(_)
        | Error::Infeasible(_)
        | Error::DimensionMismatch { .. }
        | Error::Json(_) => USAGE,
    }
}

/// Errors while reading an input dataset are data errors whatever their kind.
pub fn data_error(err: Error) -> CliError {
    match err {
        Error::Io(e) => CliError::data(format!("cannot read dataset: {e}")),
        other => CliError::data(other.to_string()),
    }
}
