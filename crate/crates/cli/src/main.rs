#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::report::{Bundle, Check};

/// Default output root when neither `--out` nor `[run] out_dir` is given.
const OUT_ENV: &str = "EP_TRANSONIC_OUT";

#[derive(Debug, Parser)]
#[command(name = "ep-transonic", version, about = "Steady transonic Euler-Poisson experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run config, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for this run.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats (repeat or comma-separate).
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
    /// Multiply the integrator tolerances.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Phase portrait of the steady field with the two sonic separatrices.
    Portrait,
    /// Smooth transonic solution through the sonic point.
    Smooth,
    /// Fit a transonic shock to boundary data.
    Shock,
    /// Structural stability sweep over doping or data perturbations.
    Sweep,
    /// Growing mode of the linearized problem at a shock with negative field.
    Modes,
    /// Run every invariant check on the configured case.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Portrait => "portrait",
            Command::Smooth => "smooth",
            Command::Shock => "shock",
            Command::Sweep => "sweep",
            Command::Modes => "modes",
            Command::Validate => "validate",
        }
    }

    fn default_formats(self) -> Vec<Format> {
        match self {
            Command::Portrait => vec![Format::Csv, Format::Json, Format::Svg],
            _ => vec![Format::Csv, Format::Json],
        }
    }
}

fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf, Vec<Format>), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse("", Path::new("."))?,
    };
    if let Some(scale) = cli.tol_scale {
        cfg.run.tol_scale = scale;
    }
    cfg.validate()?;
    let mut formats = if !cli.format.is_empty() {
        cli.format.clone()
    } else {
        cfg.run.formats.clone().unwrap_or_else(|| cli.command.default_formats())
    };
    formats.sort();
    formats.dedup();
    if formats.contains(&Format::Svg) && !matches!(cli.command, Command::Portrait) {
        return Err(CliError::config("svg output is only produced by `portrait`"));
    }
    let name = cli.command.name();
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.run.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(|root| PathBuf::from(root).join(name)))
        .unwrap_or_else(|| PathBuf::from("ep-transonic-out").join(name));
    Ok((cfg, dir, formats))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let (cfg, dir, formats) = resolve(cli)?;
    let mut bundle = Bundle::create(&dir, cli.command.name(), formats)?;
    let result = match cli.command {
        Command::Portrait => commands::portrait(&cfg, &mut bundle),
        Command::Smooth => commands::smooth(&cfg, &mut bundle),
        Command::Shock => commands::shock(&cfg, &mut bundle),
        Command::Sweep => commands::sweep(&cfg, &mut bundle),
        Command::Modes => commands::modes(&cfg, &mut bundle),
        Command::Validate => commands::validate(&cfg, &mut bundle),
    };
    match result {
        Ok(()) => {
            let code = bundle.finish(&cfg)?;
            eprintln!("{}: wrote {}", cli.command.name(), dir.display());
            Ok(code)
        }
        Err(err) => {
            bundle.check(Check::failed(cli.command.name(), &err));
            bundle.finish(&cfg)?;
            Err(err)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("{}: one or more checks FAILED", cli.command.name());
            ExitCode::from(code)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
