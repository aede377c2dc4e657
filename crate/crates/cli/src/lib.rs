//! Command-line front end: the field DSL, JSON configuration and reports.

pub mod commands;
pub mod config;
pub mod dsl;
pub mod error;
pub mod report;

pub use commands::{execute, Cli, Command, Outcome};
pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_VERDICT_FALSE};

/// Runs a parsed command line, writing the report to `stdout` and any
/// error document to `stderr`. Returns the exit status.
pub fn run(cli: &Cli, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32 {
    match execute(cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            if out.numerical_failure {
                EXIT_NUMERICAL
            } else if out.verdict {
                EXIT_OK
            } else {
                EXIT_VERDICT_FALSE
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}
