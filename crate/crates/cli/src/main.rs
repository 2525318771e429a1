//! Experiment runner: one named subcommand per figure/table family, strict
//! TOML configuration in, deterministic CSV/JSON artifacts plus a
//! checksummed run manifest out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
//! failing stage is named on stderr).

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, RunContext};
use config::ExperimentConfig;
use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(name = "pulsegate", version, about = "Pulse-level √iSWAP gate simulator and calibration toolkit")]
struct Cli {
    /// Path to the TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's [output].dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Internal parallelism bound; output ordering is deterministic
    /// regardless.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Truncation override: levels per mode.
    #[arg(long, global = true)]
    levels: Option<usize>,

    /// Re-scan the second tone before gate runs (default: use the
    /// scenario's calibrated working values).
    #[arg(long, global = true, overrides_with = "no_scan")]
    scan: bool,

    /// Use the shipped working drive values without scanning.
    #[arg(long, global = true)]
    no_scan: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ZZ coupling strength over a grid of qubit frequencies.
    ZzMap,
    /// Effective coupling versus coupler anharmonicity.
    J12Scan,
    /// Run the gate protocol and report fidelities, phases, and leakage.
    GateReport,
    /// Quasienergy map and ranked leakage candidates.
    FloquetMap,
    /// Gate error against decoherence times.
    DecoherenceSweep,
    /// Second-tone frequency scan.
    Calibrate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ZzMap => "zz-map",
            Command::J12Scan => "j12-scan",
            Command::GateReport => "gate-report",
            Command::FloquetMap => "floquet-map",
            Command::DecoherenceSweep => "decoherence-sweep",
            Command::Calibrate => "calibrate",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        // Ignore failure when a pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let config = ExperimentConfig::parse(&text)?;
    let scenario = config.resolve_scenario(cli.levels)?;
    let settings = config.propagation_settings();

    let out_dir = cli
        .out
        .clone()
        .or_else(|| {
            config
                .output
                .as_ref()
                .and_then(|o| o.dir.as_ref())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("out"));

    let seed = config.seed;
    let ctx = RunContext {
        config,
        scenario,
        settings,
        scan: cli.scan && !cli.no_scan,
    };
    let mut m = ManifestBuilder::new(cli.command.name(), &text, seed, &out_dir);
    match cli.command {
        Command::ZzMap => commands::zz_map(&ctx, &mut m)?,
        Command::J12Scan => commands::j12_scan(&ctx, &mut m)?,
        Command::GateReport => commands::gate_report(&ctx, &mut m)?,
        Command::FloquetMap => commands::floquet_map(&ctx, &mut m)?,
        Command::DecoherenceSweep => commands::decoherence_sweep(&ctx, &mut m)?,
        Command::Calibrate => commands::calibrate_cmd(&ctx, &mut m)?,
    }
    m.finish()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("i/o failure: {e}");
            ExitCode::from(3)
        }
    }
}
