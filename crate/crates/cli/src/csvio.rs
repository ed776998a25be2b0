//! CSV artifact writers. Every file starts with a `# schema:` comment line
//! and a header row; floats print in shortest round-trip form so rewrites
//! of the same data are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;

use symrl_core::agents::Variant;
use symrl_core::evaluation::{OperationReport, RunRecord};

pub fn write_rows(
    path: &Path,
    schema: &str,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# schema: {schema}")?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Per-episode training log.
pub fn write_episodes_csv(path: &Path, record: &RunRecord) -> anyhow::Result<()> {
    let rows = record.episodes.iter().enumerate().map(|(k, ep)| {
        let buffer2 = ep.buffer_sizes.get(1).copied().unwrap_or(0);
        let critic2 = ep.critic_updates.get(1).copied().unwrap_or(0);
        let q_gap = ep
            .q_sym_gap
            .map(|g| g.to_string())
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            ep.episode,
            ep.episode_return,
            record.average_return_100[k],
            ep.buffer_sizes[0],
            buffer2,
            ep.critic_updates[0],
            critic2,
            ep.actor_updates,
            q_gap
        )
    });
    write_rows(
        path,
        "symrl.episodes.v1",
        "episode,return,average_return_100,buffer1,buffer2,critic1_updates,critic2_updates,actor_updates,q_sym_gap",
        rows,
    )
}

/// Per-step training trajectory log.
pub fn write_steps_csv(path: &Path, record: &RunRecord) -> anyhow::Result<()> {
    let rows = record.steps.iter().map(|s| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.episode,
            s.t,
            s.phi,
            s.p,
            s.beta,
            s.r,
            s.phi_ref,
            s.delta_a,
            s.delta_r,
            s.reward,
            u8::from(s.done)
        )
    });
    write_rows(
        path,
        "symrl.steps.v1",
        "episode,t,phi,p,beta,r,phi_ref,delta_a,delta_r,reward,done",
        rows,
    )
}

/// Aggregated learning curves: per episode, mean/min/max of the
/// 100-episode average return across seeds, one column group per variant.
pub fn write_curves_csv(
    path: &Path,
    variants: &[Variant],
    records: &[RunRecord],
) -> anyhow::Result<()> {
    let episodes = records
        .first()
        .map(|r| r.average_return_100.len())
        .unwrap_or(0);
    let mut header = String::from("episode");
    for v in variants {
        header.push_str(&format!(",{v}_mean,{v}_min,{v}_max"));
    }
    let rows = (0..episodes).map(|ep| {
        let mut row = ep.to_string();
        for v in variants {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.variant == *v)
                .map(|r| r.average_return_100[ep])
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.push_str(&format!(",{mean},{min},{max}"));
        }
        row
    });
    write_rows(path, "symrl.curves.v1", &header, rows)
}

/// Final-window summary per variant (compare output).
pub fn write_summary_csv(
    path: &Path,
    rows_in: &[(Variant, f64, f64, f64)],
) -> anyhow::Result<()> {
    let rows = rows_in.iter().map(|(v, mean, min, max)| {
        format!("{v},{mean},{min},{max}")
    });
    write_rows(
        path,
        "symrl.summary.v1",
        "variant,final_average_return_mean,final_average_return_min,final_average_return_max",
        rows,
    )
}

/// Per-step reward aggregate under the operation protocol.
pub fn write_operation_csv(path: &Path, report: &OperationReport) -> anyhow::Result<()> {
    let rows = (0..report.horizon).map(|t| {
        format!(
            "{},{},{}",
            t + 1,
            report.step_reward_mean[t],
            report.step_reward_std[t]
        )
    });
    write_rows(path, "symrl.operation.v1", "t,reward_mean,reward_std", rows)
}

/// Channelwise tracking metrics.
pub fn write_tracking_csv(
    path: &Path,
    variant: Variant,
    report: &OperationReport,
) -> anyhow::Result<()> {
    let rows = [
        format!("{variant},roll,{},{}", report.roll.iaem, report.roll.iacm),
        format!("{variant},yaw,{},{}", report.yaw.iaem, report.yaw.iacm),
    ];
    write_rows(
        path,
        "symrl.tracking.v1",
        "variant,channel,iaem,iacm",
        rows.into_iter(),
    )
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-step mean/std of states and controls across evaluation instances.
pub fn write_trajectories_csv(path: &Path, report: &OperationReport) -> anyhow::Result<()> {
    let header = "t,phi_ref,e_phi_mean,e_phi_std,phi_mean,phi_std,p_mean,p_std,beta_mean,beta_std,r_mean,r_std,delta_a_mean,delta_a_std,delta_r_mean,delta_r_std";
    let rows = (0..report.horizon).map(|t| {
        let col = |f: &dyn Fn(&symrl_core::evaluation::EvalStep) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = report
                .instances
                .iter()
                .filter_map(|i| i.steps.get(t).map(|s| f(s)))
                .collect();
            mean_std(&vals)
        };
        let (r_mean, _) = col(&|s| s.phi_ref);
        let (e_m, e_s) = col(&|s| s.e_phi);
        let (phi_m, phi_s) = col(&|s| s.phi);
        let (p_m, p_s) = col(&|s| s.p);
        let (b_m, b_s) = col(&|s| s.beta);
        let (yr_m, yr_s) = col(&|s| s.r);
        let (da_m, da_s) = col(&|s| s.delta_a);
        let (dr_m, dr_s) = col(&|s| s.delta_r);
        format!(
            "{},{r_mean},{e_m},{e_s},{phi_m},{phi_s},{p_m},{p_s},{b_m},{b_s},{yr_m},{yr_s},{da_m},{da_s},{dr_m},{dr_s}",
            t + 1
        )
    });
    write_rows(path, "symrl.trajectories.v1", header, rows)
}

/// Full per-instance evaluation log; sufficient to recompute every metric.
pub fn write_eval_steps_csv(path: &Path, report: &OperationReport) -> anyhow::Result<()> {
    let rows = report.instances.iter().enumerate().flat_map(|(idx, inst)| {
        inst.steps.iter().map(move |s| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                idx,
                inst.seed,
                inst.episode,
                s.t,
                s.phi,
                s.p,
                s.beta,
                s.r,
                s.phi_ref,
                s.e_phi,
                s.delta_a,
                s.delta_r,
                s.reward
            )
        })
    });
    write_rows(
        path,
        "symrl.eval_steps.v1",
        "instance,seed,episode,t,phi,p,beta,r,phi_ref,e_phi,delta_a,delta_r,reward",
        rows,
    )
}
