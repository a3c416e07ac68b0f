#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Context;
use config::RunConfig;
use error::CliError;
use output::OutputDir;

/// Front propagation for reaction equations with fractional-type dispersal.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "FRACFRONT_THREADS")]
    threads: Option<usize>,

    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tabulate the Fourier symbol and fit its small-frequency exponent.
    Symbol,
    /// Evolve Heaviside data and track level sets.
    Simulate,
    /// Evaluate the linear Green's function and its tail constant.
    Greens,
    /// Search for t* and verify the sub-solution inequality.
    Certify,
}

fn load(path: Option<&Path>) -> Result<(RunConfig, PathBuf), CliError> {
    match path {
        None => Ok((RunConfig::default(), PathBuf::from("."))),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(p, e))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((RunConfig::parse(&text)?, base))
        }
    }
}

fn execute(cli: &Cli, command: Command) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let (config, base) = load(cli.config.as_deref())?;
    let root = cli
        .output
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("fracfront-out"));
    let out = OutputDir::create(&root)?;
    let ctx = Context {
        config: &config,
        base: &base,
        out: &out,
    };
    match command {
        Command::Symbol => commands::symbol(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Greens => commands::greens(&ctx),
        Command::Certify => commands::certify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        match toml::to_string(&RunConfig::default()) {
            Ok(text) => {
                print!("{text}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (symbol, simulate, greens, certify)");
        return ExitCode::from(2);
    };
    match execute(&cli, command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
