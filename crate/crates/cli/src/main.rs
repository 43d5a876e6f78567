use clap::Parser;
use std::process::ExitCode;
use wiretap_cli::{emit, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli.command).and_then(|out| emit(cli.command.common(), &out));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("wiretap: one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("wiretap: {e:#}");
            ExitCode::FAILURE
        }
    }
}
