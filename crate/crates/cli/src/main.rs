//! `relax`: command-line driver for the relaxation experiments.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or configuration
//! error, 3 I/O error.

mod args;

use std::process::ExitCode;

use clap::Parser;
use relax_core::experiment::{run_hsa_check, run_regime, run_single, run_sweep, RunConfig};
use relax_core::Error;
use serde::Serialize;

use args::{Cli, Command, ConfigError};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        _ if err.is_io() => EXIT_IO,
        Error::EmptyBand { .. }
        | Error::BandWidthMismatch { .. }
        | Error::InvalidParameter { .. }
        | Error::InvalidTimeGrid => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn config_exit_code(err: &ConfigError) -> u8 {
    match err {
        ConfigError::Read { .. } => EXIT_IO,
        ConfigError::Parse { .. } => EXIT_USAGE,
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn execute(cli: &Cli) -> Result<(), (u8, String)> {
    let config = cli
        .overrides
        .resolve()
        .map_err(|e| (config_exit_code(&e), e.to_string()))?;
    dispatch(cli, &config).map_err(|e| (exit_code(&e), e.to_string()))
}

fn dispatch(cli: &Cli, config: &RunConfig) -> Result<(), Error> {
    match &cli.command {
        Command::Run => {
            let outcome = run_single(config)?;
            log::info!("wrote run files to {}", config.out_dir.display());
            print_json(&outcome.summary);
        }
        Command::Sweep => {
            let outcome = run_sweep(config)?;
            log::info!("wrote {} runs to {}", outcome.runs.len(), config.out_dir.display());
            print_json(&outcome.summary);
        }
        Command::Regime => print_json(&run_regime(config)?),
        Command::HsaCheck(opts) => print_json(&run_hsa_check(config, &opts.options())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
