mod args;
mod commands;
mod config;
mod error;
mod figures;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command, Params};
use crate::error::CliError;

fn with_config(flags: &Params, file: &Option<Params>) -> Params {
    match file {
        Some(file) => config::merge(flags.clone(), file.clone()),
        None => flags.clone(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    match &cli.command {
        Command::Analytic { what, params } => {
            commands::analytic(*what, &with_config(params, &file))
        }
        Command::Simulate { params } => commands::simulate(&with_config(params, &file)),
        Command::Optimize { what, params } => {
            commands::optimize(*what, &with_config(params, &file))
        }
        Command::Oracle { params } => commands::oracle(&with_config(params, &file)),
        Command::Sweep { axis, params } => commands::sweep(axis, &with_config(params, &file)),
        Command::Reproduce { figure, params } => {
            figures::reproduce(figure, &with_config(params, &file))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
