//! `mcac`: batch driver for the mass-conserved Allen-Cahn laboratory.
//!
//! Each subcommand reads one JSON config, writes CSV outputs and a
//! `manifest.json` into the output directory, and exits with 0 on success,
//! 2 on configuration errors, 3 on numerical failures and 4 on I/O errors.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Utc;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::commands::Outputs;
use crate::error::{CliError, CliResult};
use crate::manifest::{digest, timestamp, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "mcac", version, about = "Mass-conserved Allen-Cahn and volume-preserving curvature flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` in the config. Defaults to `out`.
    #[arg(long, global = true, value_name = "PATH")]
    output_dir: Option<PathBuf>,

    /// Worker thread cap. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Random seed (used by `ineq`); overrides the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Travelling-wave profile θ₀ and corrector θ₁.
    Profile,
    /// Phase-field run from well-prepared initial data.
    Simulate,
    /// Marker-method volume-preserving curvature flow.
    Front,
    /// Concentric spheres under the radial ODE.
    Radial,
    /// Minimum Rayleigh quotients of the linearized operator.
    Spectrum,
    /// Randomized probe of the interpolation inequality.
    Ineq,
    /// Sharp-interface convergence study over an ε list.
    Converge,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Simulate => "simulate",
            Command::Front => "front",
            Command::Radial => "radial",
            Command::Spectrum => "spectrum",
            Command::Ineq => "ineq",
            Command::Converge => "converge",
        }
    }
}

/// Parses the config, falling back to an empty object for `profile`, whose
/// fields all have defaults.
fn load_or_default<T: DeserializeOwned>(path: Option<&Path>, allow_empty: bool) -> CliResult<(T, serde_json::Value)> {
    match path {
        Some(p) => config::load(p),
        None if allow_empty => {
            let value = serde_json::json!({});
            let parsed = T::deserialize(&value).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((parsed, value))
        }
        None => Err(CliError::Config("--config PATH is required".into())),
    }
}

fn output_dir(cli: &Cli, from_config: Option<&String>) -> PathBuf {
    cli.output_dir.clone().or_else(|| from_config.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let started = Utc::now();
    let path = cli.config.as_deref();
    let (value, mut out) = match cli.command {
        Command::Profile => {
            let (cfg, value) = load_or_default::<config::ProfileConfig>(path, true)?;
            let mut out = Outputs::create(&output_dir(cli, None))?;
            commands::profile(&cfg, &mut out)?;
            (value, out)
        }
        Command::Simulate => {
            let (cfg, value) = load_or_default::<config::SimulateConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::simulate(&cfg, &mut out)?;
            (value, out)
        }
        Command::Front => {
            let (cfg, value) = load_or_default::<config::FrontConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::front(&cfg, &mut out)?;
            (value, out)
        }
        Command::Radial => {
            let (cfg, value) = load_or_default::<config::RadialConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::radial(&cfg, &mut out)?;
            (value, out)
        }
        Command::Spectrum => {
            let (cfg, value) = load_or_default::<config::SpectrumConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::spectrum(&cfg, &mut out)?;
            (value, out)
        }
        Command::Ineq => {
            let (cfg, value) = load_or_default::<config::IneqConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::ineq(&cfg, cli.seed, &mut out)?;
            (value, out)
        }
        Command::Converge => {
            let (cfg, value) = load_or_default::<config::ConvergeConfig>(path, false)?;
            let mut out = Outputs::create(&output_dir(cli, cfg.output_dir.as_ref()))?;
            commands::converge(&cfg, &mut out)?;
            (value, out)
        }
    };
    out.files.push("manifest.json".into());
    let manifest = RunManifest {
        command: cli.command.name().into(),
        config_digest: digest(&value),
        version: env!("CARGO_PKG_VERSION").into(),
        started: timestamp(started),
        finished: timestamp(Utc::now()),
        outputs: out.files.clone(),
    };
    manifest.write(out.dir())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mcac {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
