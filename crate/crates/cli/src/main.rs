//! `epdiff`: run, compare and verify the EPDiff integrators.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epdiff_core::{Overrides, RunConfig, SchemeChoice};

use crate::failure::CliError;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "EPDIFF_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "epdiff", version, about = "Discrete-diffeomorphism integrators for the Camassa-Holm equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configuration and write CSV/JSON/plot artifacts.
    Run(ConfigArgs),
    /// Error-vs-dt study of the variational schemes against the RK4 reference.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of dt levels (dt, dt/2, dt/4, ...).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Schemes to include (default: explicit, implicit, average).
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
    },
    /// Run the self-check suite and print a JSON report.
    Verify {
        /// Also write the report to DIR/verify.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = epdiff_core::verify::DEFAULT_SEED)]
        seed: u64,
    },
    /// Print a preset (or the given config) as TOML.
    Show(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration, e.g. desk-gaussian.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,
    #[arg(long, value_name = "X")]
    dt: Option<f64>,
    #[arg(long, value_name = "X")]
    tfinal: Option<f64>,
    #[arg(long, value_name = "N")]
    nmodes: Option<usize>,
    #[arg(long, value_name = "X")]
    alpha: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_path(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => {
                return Err(CliError::Validation(format!(
                    "one of --config or --preset is required (presets: {})",
                    epdiff_core::config::PRESETS.join(", ")
                )))
            }
        };
        let scheme = self
            .scheme
            .as_deref()
            .map(|s| s.parse::<SchemeChoice>().map_err(|m| CliError::Validation(format!("--scheme: {m}"))))
            .transpose()?;
        config.apply(&Overrides {
            scheme,
            dt: self.dt,
            t_final: self.tfinal,
            n_modes: self.nmodes,
            alpha: self.alpha,
            directory: self.out.clone(),
        })?;
        Ok(config)
    }
}

fn init_workers() -> Result<(), CliError> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Validation(format!("{WORKERS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot size worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_workers()?;
    match cli.command {
        Command::Run(args) => commands::cmd_run(&args.load()?),
        Command::Compare { config, levels, schemes } => {
            let schemes = schemes
                .iter()
                .map(|s| s.parse().map_err(|e: epdiff_core::Error| CliError::Validation(format!("--schemes: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            commands::cmd_compare(&config.load()?, levels, &schemes)
        }
        Command::Verify { out, seed } => commands::cmd_verify(out.as_deref(), seed),
        Command::Show(args) => {
            print!("{}", args.load()?.emit());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epdiff: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
