mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use commands::Io;
use error::{CliError, CliResult};
use manifest::RunManifest;

fn run(argv: Vec<std::ffi::OsString>) -> CliResult<()> {
    let argv = config::merge_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::usage(e.render().to_string().trim().to_string())),
    };
    let start = Instant::now();
    let mut io = Io::default();
    let (name, flags, result) = match &cli.command {
        Command::Densify(a) => ("densify", serde_json::to_value(a), commands::densify(a, &mut io)),
        Command::Simulate(a) => ("simulate", serde_json::to_value(a), commands::simulate(a, &mut io)),
        Command::Fit(a) => ("fit", serde_json::to_value(a), commands::fit(a, &mut io)),
        Command::Forecast(a) => ("forecast", serde_json::to_value(a), commands::forecast(a, &mut io)),
        Command::Acf(a) => ("acf", serde_json::to_value(a), commands::acf(a, &mut io)),
        Command::Backtest(a) => ("backtest", serde_json::to_value(a), commands::backtest(a, &mut io)),
        Command::Montecarlo(a) => ("montecarlo", serde_json::to_value(a), commands::montecarlo(a, &mut io)),
    };
    result?;
    RunManifest {
        command: name.to_string(),
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        flags: flags.unwrap_or(serde_json::Value::Null),
        seed: io.seed,
        inputs: io.inputs,
        outputs: io.outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    }
    .write_all()
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
