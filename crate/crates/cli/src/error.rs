use std::fmt;

use serde_json::{json, Value};

use crate::config::FORMAT_VERSION;
use crate::dsl::ParseError;

/// Exit status: success or verdict true.
pub const EXIT_OK: i32 = 0;
/// Exit status: the command ran and its verdict is false.
pub const EXIT_VERDICT_FALSE: i32 = 1;
/// Exit status: malformed input.
pub const EXIT_INPUT: i32 = 2;
/// Exit status: a numerical failure.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Parse { what: String, source_text: String, error: ParseError },
    Config(String),
    Io { path: String, message: String },
    Usage(String),
    Core(sodelie::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<sodelie::Error> for CliError {
    fn from(e: sodelie::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { what, error, .. } => write!(f, "{what}: {error}"),
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Config(_) => "config_error",
            CliError::Io { .. } => "io_error",
            CliError::Usage(_) => "usage_error",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }

    /// The error document written to stderr.
    pub fn to_json(&self) -> Value {
        let mut error = json!({ "code": self.code(), "message": self.to_string() });
        if let CliError::Parse { what, error: e, .. } = self {
            error["location"] = json!({ "input": what, "line": e.line, "column": e.column });
        }
        json!({ "format_version": FORMAT_VERSION, "error": error })
    }
}
