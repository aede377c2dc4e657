use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use sodelie_cli::{run, Cli, CliError, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let doc = CliError::Usage(e.to_string().trim().to_string()).to_json();
            eprintln!("{doc}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let code = run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
