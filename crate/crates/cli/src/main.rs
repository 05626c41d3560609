use std::process::ExitCode;

use clap::Parser;
use rankexp_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if cli.json_to_stdout() {
                print!("{}", outcome.json);
            } else {
                print!("{}", outcome.table);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Validation(report) = &e {
                if let Ok(json) = serde_json::to_string_pretty(report) {
                    eprintln!("{json}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
