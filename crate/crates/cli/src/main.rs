use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sysrisk_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.output.as_bytes());
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("sysrisk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
