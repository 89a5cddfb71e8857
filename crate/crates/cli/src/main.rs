use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = captrade::Cli::parse();
    match captrade::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(captrade::exit_code(&err))
        }
    }
}
