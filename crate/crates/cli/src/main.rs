mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Reproject(a) => commands::reproject::run(a),
        Command::RigGen(a) => commands::rig_gen::run(a),
        Command::NerfConvert(a) => commands::nerf_convert::run(a),
        Command::OracleRender(a) => commands::oracle_render::run(a),
        Command::Compare(a) => commands::compare::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
