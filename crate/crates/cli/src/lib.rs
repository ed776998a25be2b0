//! Command-line front end: configuration ingestion, experiment
//! orchestration (multi-seed train / eval / compare), CSV artifact output,
//! and the symmetry-check utility.

pub mod commands;
pub mod config;
pub mod csvio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "symrl",
    about = "Aircraft lateral-tracking RL lab: DDPG with symmetric data/critic augmentation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Episodes per (variant, seed) run.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Output directory (default: config, then $SYMRL_OUT, then ./runs).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parallel worker limit; 0 uses all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Agent variants to run, comma separated (ddpg, sda, sca).
    #[arg(long, value_delimiter = ',')]
    pub variant: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the configured variants over all seeds and write run CSVs,
    /// checkpoints, and aggregated learning curves.
    Train(CommonArgs),
    /// Evaluate a frozen actor checkpoint under the sine-reference
    /// operation protocol.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint JSON produced by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train all three variants and emit combined learning curves plus the
    /// qualitative ordering.
    Compare(CommonArgs),
    /// Verify the mirror-symmetry conditions of the discretized model and
    /// sweep random transition pairs.
    CheckSymmetry {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seeds: self.seeds.clone(),
            episodes: self.episodes,
            out: self.out.clone(),
            jobs: self.jobs,
            variants: self.variant.clone(),
        }
    }
}

pub fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(args) => {
            let cfg = load_config(args.config.as_deref(), &args.overrides())?;
            commands::train::run_training(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(args) => {
            let cfg = load_config(args.config.as_deref(), &args.overrides())?;
            commands::compare::run_compare(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { common, checkpoint } => {
            // --seeds/--episodes steer the evaluation protocol here
            let mut overrides = common.overrides();
            let eval_seeds = overrides.seeds.take();
            let eval_episodes = overrides.episodes.take();
            let mut cfg = load_config(common.config.as_deref(), &overrides)?;
            cfg.apply_eval_overrides(eval_seeds, eval_episodes);
            commands::eval::run_eval(&checkpoint, &cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckSymmetry { config } => {
            let cfg = load_config(config.as_deref(), &Overrides::default())?;
            let passed = commands::check_symmetry::run_check(&cfg)?;
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
