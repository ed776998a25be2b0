//! Runs all three variants over the configured seeds and reports the
//! qualitative ordering of their final learning-curve values. The ordering
//! is statistical: small seed counts reorder easily, so treat it as a
//! trend, not a benchmark verdict.

use symrl_core::agents::Variant;

use crate::commands::train::{run_training_with_variants, TrainOutcome};
use crate::config::EffectiveConfig;
use crate::csvio;

/// Final-window statistics per variant: (mean, min, max) across seeds of
/// the last 100-episode average return.
pub fn final_window_stats(outcome: &TrainOutcome) -> Vec<(Variant, f64, f64, f64)> {
    Variant::ALL
        .iter()
        .map(|v| {
            let finals: Vec<f64> = outcome
                .records
                .iter()
                .filter(|r| r.variant == *v)
                .filter_map(|r| r.average_return_100.last().copied())
                .collect();
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            let min = finals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (*v, mean, min, max)
        })
        .collect()
}

pub fn run_compare(cfg: &EffectiveConfig) -> anyhow::Result<TrainOutcome> {
    let outcome = run_training_with_variants(cfg, &Variant::ALL)?;

    let mut stats = final_window_stats(&outcome);
    csvio::write_summary_csv(&outcome.out_dir.join("summary.csv"), &stats)?;

    stats.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    for (variant, mean, min, max) in &stats {
        println!("{variant}: final average return mean {mean:.3} (min {min:.3}, max {max:.3})");
    }
    let ordering: Vec<String> = stats.iter().map(|(v, ..)| v.to_string()).collect();
    println!("qualitative ordering (statistical): {}", ordering.join(" > "));
    println!("curves written to {}", outcome.out_dir.join("curves.csv").display());
    Ok(outcome)
}
