//! Multi-seed training orchestration. Each (variant, seed) pair runs as an
//! independent worker; workers share nothing and write their own artifacts,
//! so failures leave completed runs on disk.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;

use symrl_core::agents::{save_checkpoint, train, Agent, TrainOptions, Variant};
use symrl_core::environment::Environment;
use symrl_core::evaluation::RunRecord;

use crate::config::EffectiveConfig;
use crate::csvio;

pub struct TrainOutcome {
    /// One record per (variant, seed), in `variants x seeds` order.
    pub records: Vec<RunRecord>,
    pub out_dir: PathBuf,
}

pub fn run_dir(out_dir: &std::path::Path, variant: Variant, seed: u64) -> PathBuf {
    out_dir.join(format!("{variant}_seed{seed}"))
}

fn run_one(cfg: &EffectiveConfig, variant: Variant, seed: u64) -> anyhow::Result<RunRecord> {
    let dir = run_dir(&cfg.run.out_dir, variant, seed);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut env = Environment::new(cfg.env_config(), seed);
    let mut agent = Agent::new(variant, cfg.agent_config(), cfg.augmentation(), seed);
    let opts = TrainOptions {
        episodes: cfg.run.episodes,
        checkpoint_every: cfg.run.checkpoint_every,
        q_probe_count: 128,
    };

    let started = Instant::now();
    let record = train(&mut agent, &mut env, &opts, |episode, agent| {
        let path = dir.join(format!("checkpoint_ep{episode:06}.json"));
        save_checkpoint(&path, &agent.checkpoint(episode))
    })
    .with_context(|| format!("training {variant} seed {seed}"))?;
    let wall = started.elapsed().as_secs_f64();

    save_checkpoint(
        &dir.join("checkpoint_final.json"),
        &agent.checkpoint(cfg.run.episodes),
    )?;
    csvio::write_episodes_csv(&dir.join("episodes.csv"), &record)?;
    if cfg.run.log_steps {
        csvio::write_steps_csv(&dir.join("steps.csv"), &record)?;
    }
    // wall time lives outside the CSVs: reruns must produce byte-identical
    // CSV artifacts, and elapsed time is not reproducible
    let meta = format!(
        "{{\"variant\":\"{variant}\",\"seed\":{seed},\"episodes\":{},\"wall_time_s\":{wall},\"buffer_sizes\":{:?},\"critic_updates\":{:?},\"actor_updates\":{}}}\n",
        cfg.run.episodes,
        agent.buffer_sizes(),
        agent.counters().critic,
        agent.counters().actor,
    );
    std::fs::write(dir.join("meta.json"), meta)?;
    Ok(record)
}

/// Trains every configured (variant, seed) pair, up to `run.jobs` in
/// parallel, and writes the per-run artifacts plus aggregated `curves.csv`.
pub fn run_training_with_variants(
    cfg: &EffectiveConfig,
    variants: &[Variant],
) -> anyhow::Result<TrainOutcome> {
    let out_dir = cfg.run.out_dir.clone();
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("config_echo.toml"), cfg.echo_toml())?;

    let jobs = if cfg.run.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cfg.run.jobs
    };
    let runs: Vec<(Variant, u64)> = variants
        .iter()
        .flat_map(|v| cfg.run.seeds.iter().map(move |s| (*v, *s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let records: Vec<RunRecord> = pool.install(|| {
        runs.par_iter()
            .map(|(variant, seed)| run_one(cfg, *variant, *seed))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    csvio::write_curves_csv(&out_dir.join("curves.csv"), variants, &records)?;
    Ok(TrainOutcome { records, out_dir })
}

pub fn run_training(cfg: &EffectiveConfig) -> anyhow::Result<TrainOutcome> {
    let variants = cfg.variants()?;
    let outcome = run_training_with_variants(cfg, &variants)?;
    println!(
        "trained {} runs into {}",
        outcome.records.len(),
        outcome.out_dir.display()
    );
    Ok(outcome)
}
