use std::process::ExitCode;

use clap::Parser;
use swarmplan_cli::{configure_threads, run, Cli, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
