use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtp_core::teleporter::Regime;
use cvtp_core::validation::Level;

use crate::commands;
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "cvtp", version, about = "All-optical CV teleportation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file; built-in reference values when omitted.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $CVTP_RUNS_DIR or ./runs, plus <timestamp>-<command>).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegimeArg {
    Quantum,
    Classical,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Quantum => Regime::Quantum,
            RegimeArg::Classical => Regime::Classical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic output noise and vacuum fidelity, quantum and classical.
    Budget {
        #[command(flatten)]
        common: Common,
    },
    /// Frequency-domain run: jittered ±1 THz spectra and band averages.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Overrides the config regime.
        #[arg(long)]
        regime: Option<RegimeArg>,
    },
    /// Time-domain run: homodyne traces, temporal modes, fidelities.
    Timetrace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Overrides `timetrace.traces`.
        #[arg(long)]
        traces: Option<usize>,
        #[arg(long)]
        regime: Option<RegimeArg>,
    },
    /// Analytic budget and circuit variance over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of n_sq, eta_bell, eta_meas, ff_gain_db.
        #[arg(long)]
        param: String,
        /// start:stop:n (inclusive).
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// Oracle cross-checks and invariant suites.
    Validate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Also write a report and manifest here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Checks the digests recorded in a run directory's manifest.
    Verify { run_dir: PathBuf },
}

fn load(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn report_dir(dir: PathBuf) {
    println!("wrote {}", dir.display());
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Budget { common } => {
            let cfg = load(common.config.as_deref())?;
            report_dir(commands::budget(&cfg, common.out_dir.as_deref())?);
        }
        Command::Spectrum { common, seed, regime } => {
            let cfg = load(common.config.as_deref())?;
            report_dir(commands::spectrum(&cfg, regime.map(Into::into), seed, common.out_dir.as_deref())?);
        }
        Command::Timetrace {
            common,
            seed,
            traces,
            regime,
        } => {
            let cfg = load(common.config.as_deref())?;
            report_dir(commands::timetrace(&cfg, regime.map(Into::into), traces, seed, common.out_dir.as_deref())?);
        }
        Command::Sweep { common, param, range } => {
            let cfg = load(common.config.as_deref())?;
            report_dir(commands::sweep(&cfg, &param, &range, common.out_dir.as_deref())?);
        }
        Command::Validate { config, level, out_dir } => {
            let cfg = config.as_deref().map(|p| RunConfig::load(p)).transpose()?;
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            commands::validate(cfg.as_ref(), level, out_dir.as_deref())?;
        }
        Command::Verify { run_dir } => commands::verify(&run_dir)?,
    }
    Ok(())
}
