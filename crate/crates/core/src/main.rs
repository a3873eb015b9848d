use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dewet::cli::{self, Command, RawConfig};

/// Solid-state dewetting simulations and convergence studies.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat JSON config; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validate the configuration and print the plan without writing anything
    #[arg(long = "dry-run")]
    dry_run: bool,
    #[command(flatten)]
    keys: RawConfig,
}

fn load(cli: &Cli) -> dewet::Result<cli::RunConfig> {
    let base = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| dewet::Error::Config {
                key: "--config".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            cli::parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    let mut flags = cli.keys.clone();
    flags.command = Some(cli.command);
    cli::validate(base.merged(&flags)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.dry_run {
        println!("{}", cli::plan(&config));
        return ExitCode::SUCCESS;
    }
    match cli::run(&config) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
