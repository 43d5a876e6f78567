//! Command-line front end: scenario files in, CSV/JSON curves out.

pub mod commands;
pub mod output;
pub mod scenario;
pub mod sweep;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

pub use commands::RegionMode;
pub use output::CurveOutput;
pub use scenario::ScenarioFile;
pub use sweep::Sweep;

#[derive(Debug, Parser)]
#[command(name = "wiretap", version, about = "Secrecy-rate bounds and BCCM regions with finite CSI feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Scenario file (TOML); the built-in 3-user Rayleigh scenario when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Sweep such as `P=0:40:5;b=1,2,4`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Write CSV here instead of stdout (the JSON mirror goes next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also emit the JSON mirror (to stdout when no --out is given).
    #[arg(long)]
    pub json: bool,
    /// Overrides both the optimizer and the simulation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Common-message bounds over P and b.
    CmBounds(Common),
    /// Independent-message sum-rate bounds over P, K and b.
    ImBounds(Common),
    /// BCCM rate-region frontier.
    BccmRegion {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "errorfree")]
        mode: RegionMode,
        #[arg(long, default_value_t = 21)]
        frontier_samples: usize,
        /// Trace the high-SNR region instead.
        #[arg(long)]
        high_snr: bool,
    },
    /// log log K scaling of the high-SNR sum-rate bounds.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Add a sampled check of the upper value.
        #[arg(long)]
        mc_check: bool,
    },
    /// Monte Carlo against quadrature for every evaluator; fails on a mismatch.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Allowed deviation in standard errors.
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::CmBounds(c) | Command::ImBounds(c) => c,
            Command::BccmRegion { common, .. } | Command::Scaling { common, .. } | Command::Validate { common, .. } => {
                common
            }
        }
    }
}

/// Loads the scenario, applies `--seed`, and runs the command.
pub fn execute(command: &Command) -> Result<CurveOutput> {
    let common = command.common();
    let mut file = match &common.scenario {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    if let Some(seed) = common.seed {
        file = file.with_seed(seed);
    }
    let sweep = match &common.sweep {
        Some(s) => Sweep::parse(s)?,
        None => Sweep::default(),
    };
    match command {
        Command::CmBounds(_) => commands::cm_bounds(&file, &sweep),
        Command::ImBounds(_) => commands::im_bounds(&file, &sweep),
        Command::BccmRegion { mode, frontier_samples, high_snr, .. } => {
            commands::bccm_region_cmd(&file, &sweep, *mode, *frontier_samples, *high_snr)
        }
        Command::Scaling { mc_check, .. } => commands::scaling(&file, &sweep, *mc_check),
        Command::Validate { sigmas, .. } => commands::validate(&file, *sigmas),
    }
}

/// Writes the output as requested and returns whether the command passed.
pub fn emit(common: &Common, out: &CurveOutput) -> Result<bool> {
    let csv = out.table.to_csv()?;
    match &common.out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("cannot write {}", path.display()))?;
            if common.json {
                let json_path = path.with_extension("json");
                std::fs::write(&json_path, out.to_json()?)
                    .with_context(|| format!("cannot write {}", json_path.display()))?;
            }
        }
        None => {
            let text = if common.json { out.to_json()? } else { csv };
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(out.passed)
}
