use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    // usage errors exit with status 2 from inside `parse`
    let cli = aggregation_cli::Cli::parse();
    match aggregation_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
