use std::process::ExitCode;

use clap::Parser;
use ghlab_cli::commands::{run, Cli};
use ghlab_cli::{EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.command.params().threads;
    let pool = match threads {
        Some(0) => {
            eprintln!("error: invalid config: field 'threads': must be at least 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let code = match pool.install(|| run(&cli.command)) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
