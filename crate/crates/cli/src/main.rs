//! `sqrs`: run protocol simulations and regenerate figure data.
//!
//! Results go to stdout as one JSON object. Failures print a single JSON
//! line `{"error": <kind>, "message": ...}` on stderr and exit non-zero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sqrs::channel::Preset;
use sqrs::experiment::{cmd_qber, cmd_reproduce, cmd_simulate, ExperimentConfig, Figure};

#[derive(Debug, Parser)]
#[command(
    name = "sqrs",
    version,
    about = "Secure quantum remote sensing simulator"
)]
struct Cli {
    /// TOML experiment configuration; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace the channel with a named preset (ideal, field-50km, field-noise).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated phases in radians.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    phases: Option<Vec<f64>>,
    /// Emitted pulses per phase.
    #[arg(long, global = true)]
    pulses: Option<u64>,
    /// Emitted pulses per calibration phase.
    #[arg(long, global = true)]
    calibration_pulses: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every phase and write counts and click logs.
    Simulate {
        /// Intercept and resend every pulse.
        #[arg(long)]
        attack: bool,
    },
    /// Write the data behind a figure as CSV.
    Reproduce {
        /// fig2, fig4, fig5, fig6 or all.
        #[arg(long)]
        figure: String,
    },
    /// Check-path QBER with and without an intercept-resend attack.
    Qber,
    /// Print the effective configuration as TOML.
    Config,
}

fn build_config(cli: &Cli) -> sqrs::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &cli.preset {
        cfg.channel = name.parse::<Preset>()?.params();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(phases) = &cli.phases {
        cfg.phases = phases.clone();
    }
    if let Some(pulses) = cli.pulses {
        cfg.pulses_per_phase = pulses;
    }
    if let Some(pulses) = cli.calibration_pulses {
        cfg.calibration_pulses = pulses;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> sqrs::Result<serde_json::Value> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Simulate { attack } => {
            let summary = cmd_simulate(&cfg, *attack)?;
            Ok(json!({
                "command": "simulate",
                "attack": attack,
                "files": summary.files,
                "sensing_events": summary.per_phase.iter().map(|p| p.sensing_events).collect::<Vec<_>>(),
            }))
        }
        Command::Reproduce { figure } => {
            let figure: Figure = figure.parse()?;
            let files = cmd_reproduce(&cfg, figure)?;
            Ok(json!({ "command": "reproduce", "figure": figure.name(), "files": files }))
        }
        Command::Qber => Ok(serde_json::to_value(cmd_qber(&cfg)?)?),
        Command::Config => {
            print!("{}", cfg.to_toml()?);
            Ok(serde_json::Value::Null)
        }
    }
}

fn fail(kind: &str, message: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": kind, "message": message.to_string() })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render(), 2),
    };
    match run(&cli) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e, 1),
    }
}
