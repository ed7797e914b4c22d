mod args;
mod commands;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, RunConfig};
use table::Table;

/// Why a run did not succeed; each variant has its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration files (exit 2).
    Config(String),
    /// The verification suite ran and at least one check failed (exit 3).
    Verify(Table),
    /// A numerical routine failed on valid input (exit 1).
    Runtime(String),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("BUBBLEKIT_THREADS") else {
        return Ok(());
    };
    let k: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|k| *k > 0)
        .ok_or_else(|| Failure::Config(format!("BUBBLEKIT_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| Failure::Runtime(e.to_string()))
}

fn emit(run: &RunConfig, table: &Table) -> anyhow::Result<()> {
    let bytes = table.to_bytes();
    match &run.output_path {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let config = RunConfig::from_cli(cli)?;
    let outcome = commands::dispatch(cli, &config);
    let table = match &outcome {
        Ok(t) | Err(Failure::Verify(t)) => t,
        Err(_) => return outcome.map(|_| ()),
    };
    emit(&config, table).map_err(|e| Failure::Runtime(format!("writing output: {e}")))?;
    outcome.map(|_| ())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(_)) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
