mod commands;
mod config;
mod figures;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] skyrelay_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use skyrelay_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "skyrelay", version, about = "Relay-chain link budgets and repeater distribution times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML, or the JSON echoed in output metadata).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Overrides every seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Channel budget for a fixed or optimized platform count.
    Channel,
    /// Repeater distribution-time bounds, plus Monte Carlo when `[simulation].trials` is set.
    Rate,
    /// Platform position jitter Monte Carlo.
    Jitter,
    /// One repeater Monte Carlo run.
    Simulate,
    /// Regenerate a figure dataset.
    Figure {
        /// One of fig2a, fig2b, fig3, fig4, fig6, fig7, fig8.
        id: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    let (name, table) = match &cli.command {
        Command::Channel => ("channel".to_string(), commands::channel(&cfg)?),
        Command::Rate => ("rate".to_string(), commands::rate(&cfg)?),
        Command::Jitter => ("jitter".to_string(), commands::jitter(&cfg)?),
        Command::Simulate => ("simulate".to_string(), commands::simulate(&cfg)?),
        Command::Figure { id } => (format!("figure {id}"), figures::figure(id, &cfg)?),
    };
    let format = cli.format.or(cfg.output.format).unwrap_or(Format::Csv);
    let path = cli.output.clone().or_else(|| cfg.output.path.clone());
    let meta = table::Meta::new(&name, &cfg);
    let text = table::render(&table, &meta, format)?;
    match path {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skyrelay: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
