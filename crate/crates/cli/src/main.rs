use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod table;

use cli::{Cli, Command};
use commands::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    let (opts, f): (_, fn(&cli::Opts) -> commands::Outcome<commands::Output>) = match cli.command {
        Command::Spectrum(o) => (o, commands::spectrum),
        Command::Capacity(o) => (o, commands::capacity),
        Command::Region(o) => (o, commands::region),
        Command::Converge(o) => (o, commands::converge),
        Command::Simulate(o) => (o, commands::simulate),
    };
    let opts = opts.merged()?;
    let output = f(&opts)?;
    commands::write_output(&opts, output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version go to stdout and are not failures
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
