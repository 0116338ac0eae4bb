use std::process::ExitCode;

use clap::Parser;
use hyperlattice_cli::{run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args, &mut std::io::stdout().lock(), &mut std::io::stderr()) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}
