use std::process::ExitCode;

use clap::Parser;
use philasso::commands::{self, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    philasso::logging::init(cli.json_logs, log::Level::Info);
    match commands::run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}
