//! Run configuration: TOML file plus flag overrides on top of compiled-in
//! defaults (flags > file > defaults). Human-facing angle values are in
//! degrees and converted to radians exactly once, when the core configs are
//! derived; the echoed config re-emits the degree values verbatim so a
//! rerun from the echo reproduces identical results.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use symrl_core::agents::{AgentConfig, Variant};
use symrl_core::dynamics::AeroParams;
use symrl_core::environment::{EnvConfig, ReferenceSignal};
use symrl_core::symmetry::{AugmentationMap, RewardMode};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    run: Option<RunSection>,
    env: Option<EnvSection>,
    agent: Option<AgentSection>,
    aero: Option<AeroParams>,
    symmetry: Option<SymmetrySection>,
    eval: Option<EvalSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    variants: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    episodes: Option<usize>,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
    checkpoint_every: Option<usize>,
    log_steps: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvSection {
    dt: Option<f64>,
    episode_len: Option<usize>,
    init_phi_deg: Option<f64>,
    init_p_deg: Option<f64>,
    init_beta_deg: Option<f64>,
    init_r_deg: Option<f64>,
    action_bound_deg: Option<f64>,
    divergence_bound_deg: Option<f64>,
    reference: Option<String>,
    square_period_s: Option<f64>,
    square_amplitude_deg: Option<f64>,
    sine_amplitude_deg: Option<f64>,
    sine_omega_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentSection {
    critic_lr: Option<f64>,
    actor_lr: Option<f64>,
    tau: Option<f64>,
    gamma: Option<f64>,
    batch_size: Option<usize>,
    buffer_capacity: Option<usize>,
    updates_per_step: Option<usize>,
    warmup: Option<usize>,
    ou_sigma: Option<f64>,
    ou_theta: Option<f64>,
    ou_dt: Option<f64>,
    hidden: Option<[usize; 2]>,
    actor_hidden_order: Option<String>,
    reward_mode: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetrySection {
    x_star_deg: Option<[f64; 4]>,
    identity_f: Option<bool>,
    pairs: Option<usize>,
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    seeds: Option<Vec<u64>>,
    episodes: Option<usize>,
}

/// Flag-level overrides (highest precedence).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub episodes: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub variants: Option<Vec<String>>,
}

/// Fully resolved configuration in file units (angles in degrees). This is
/// what gets echoed; core configs are derived from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub run: RunSettings,
    pub env: EnvSettings,
    pub agent: AgentSettings,
    pub aero: AeroParams,
    pub symmetry: SymmetrySettings,
    pub eval: EvalSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub variants: Vec<String>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub checkpoint_every: usize,
    pub log_steps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvSettings {
    pub dt: f64,
    pub episode_len: usize,
    pub init_phi_deg: f64,
    pub init_p_deg: f64,
    pub init_beta_deg: f64,
    pub init_r_deg: f64,
    pub action_bound_deg: f64,
    pub divergence_bound_deg: f64,
    pub reference: String,
    pub square_period_s: f64,
    pub square_amplitude_deg: f64,
    pub sine_amplitude_deg: f64,
    pub sine_omega_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentSettings {
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub tau: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub updates_per_step: usize,
    pub warmup: usize,
    pub ou_sigma: f64,
    pub ou_theta: f64,
    pub ou_dt: f64,
    pub hidden: [usize; 2],
    pub actor_hidden_order: String,
    pub reward_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetrySettings {
    pub x_star_deg: [f64; 4],
    pub identity_f: bool,
    pub pairs: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSettings {
    pub seeds: Vec<u64>,
    pub episodes: usize,
}

impl EffectiveConfig {
    pub fn variants(&self) -> anyhow::Result<Vec<Variant>> {
        self.run
            .variants
            .iter()
            .map(|s| s.parse::<Variant>().map_err(|e| anyhow::anyhow!("run.variants: {e}")))
            .collect()
    }

    /// Core environment config (radians).
    pub fn env_config(&self) -> EnvConfig {
        let e = &self.env;
        EnvConfig {
            dt: e.dt,
            episode_len: e.episode_len,
            init_phi: e.init_phi_deg.to_radians(),
            init_p: e.init_p_deg.to_radians(),
            init_beta: e.init_beta_deg.to_radians(),
            init_r: e.init_r_deg.to_radians(),
            action_bound: e.action_bound_deg.to_radians(),
            divergence_bound: e.divergence_bound_deg.to_radians(),
            reference: self.reference_signal(),
            aero: self.aero,
        }
    }

    pub fn reference_signal(&self) -> ReferenceSignal {
        let e = &self.env;
        if e.reference == "sine" {
            ReferenceSignal::Sine {
                amplitude: e.sine_amplitude_deg.to_radians(),
                omega: e.sine_omega_rad_s,
            }
        } else {
            ReferenceSignal::Square {
                period_s: e.square_period_s,
                amplitude: e.square_amplitude_deg.to_radians(),
            }
        }
    }

    /// Core agent config; the action bound mirrors the environment's.
    pub fn agent_config(&self) -> AgentConfig {
        let a = &self.agent;
        AgentConfig {
            critic_lr: a.critic_lr,
            actor_lr: a.actor_lr,
            tau: a.tau,
            gamma: a.gamma,
            batch_size: a.batch_size,
            buffer_capacity: a.buffer_capacity,
            updates_per_step: a.updates_per_step,
            warmup: a.warmup,
            ou_sigma: a.ou_sigma,
            ou_theta: a.ou_theta,
            ou_dt: a.ou_dt,
            hidden: a.hidden,
            actor_hidden_swap: a.actor_hidden_order == "relu-tanh",
            action_bound: self.env.action_bound_deg.to_radians(),
        }
    }

    pub fn augmentation(&self) -> AugmentationMap {
        AugmentationMap {
            x_star: self.symmetry.x_star_deg.map(f64::to_radians),
            reward_mode: if self.agent.reward_mode == "negate" {
                RewardMode::Negate
            } else {
                RewardMode::Preserve
            },
        }
    }

    pub fn apply_eval_overrides(&mut self, seeds: Option<Vec<u64>>, episodes: Option<usize>) {
        if let Some(s) = seeds {
            self.eval.seeds = s;
        }
        if let Some(e) = episodes {
            self.eval.episodes = e;
        }
    }

    /// Effective config as TOML, with the radian equivalents of the angle
    /// fields appended as comments. Re-parsing the echo reproduces this
    /// config exactly.
    pub fn echo_toml(&self) -> String {
        let body = toml::to_string(self).expect("config serializes");
        let e = &self.env;
        let mut out = String::new();
        out.push_str("# effective configuration (flags > file > defaults)\n");
        out.push_str(&body);
        out.push_str("\n# radian equivalents of the angle-valued fields:\n");
        for (name, deg) in [
            ("env.init_phi", e.init_phi_deg),
            ("env.init_p", e.init_p_deg),
            ("env.init_beta", e.init_beta_deg),
            ("env.init_r", e.init_r_deg),
            ("env.action_bound", e.action_bound_deg),
            ("env.divergence_bound", e.divergence_bound_deg),
            ("env.square_amplitude", e.square_amplitude_deg),
            ("env.sine_amplitude", e.sine_amplitude_deg),
        ] {
            out.push_str(&format!("# {name} = {} rad\n", deg.to_radians()));
        }
        for (i, deg) in self.symmetry.x_star_deg.iter().enumerate() {
            out.push_str(&format!("# symmetry.x_star[{i}] = {} rad\n", deg.to_radians()));
        }
        out
    }
}

fn default_config() -> EffectiveConfig {
    EffectiveConfig {
        run: RunSettings {
            variants: vec!["ddpg".into()],
            seeds: vec![0, 1, 2],
            episodes: 500,
            out_dir: PathBuf::new(), // resolved in load_config
            jobs: 0,
            checkpoint_every: 100,
            log_steps: true,
        },
        env: EnvSettings {
            dt: 0.1,
            episode_len: 300,
            init_phi_deg: 30.0,
            init_p_deg: 10.0,
            init_beta_deg: 30.0,
            init_r_deg: 10.0,
            action_bound_deg: 1.0_f64.to_degrees(),
            divergence_bound_deg: 10.0_f64.to_degrees(),
            reference: "square".into(),
            square_period_s: 3.0,
            square_amplitude_deg: 30.0,
            sine_amplitude_deg: 20.0,
            sine_omega_rad_s: 0.2 * std::f64::consts::PI,
        },
        agent: AgentSettings {
            critic_lr: 1e-3,
            actor_lr: 1e-3,
            tau: 0.01,
            gamma: 0.99,
            batch_size: 256,
            buffer_capacity: 9_000_000,
            updates_per_step: 1,
            warmup: 256,
            ou_sigma: 0.015,
            ou_theta: 0.1,
            ou_dt: 0.01,
            hidden: [64, 64],
            actor_hidden_order: "tanh-relu".into(),
            reward_mode: "preserve".into(),
        },
        aero: AeroParams::default(),
        symmetry: SymmetrySettings {
            x_star_deg: [0.0; 4],
            identity_f: false,
            pairs: 1000,
            tolerance: 1e-10,
        },
        eval: EvalSettings {
            seeds: vec![0, 1, 2],
            episodes: 10,
        },
    }
}

macro_rules! merge {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

fn validate(cfg: &EffectiveConfig) -> anyhow::Result<()> {
    let r = &cfg.run;
    if r.seeds.is_empty() {
        bail!("config: run.seeds must be non-empty");
    }
    if r.episodes == 0 {
        bail!("config: run.episodes must be >= 1");
    }
    if r.variants.is_empty() {
        bail!("config: run.variants must be non-empty");
    }
    cfg.variants()?;
    let e = &cfg.env;
    if e.dt <= 0.0 {
        bail!("config: env.dt must be positive");
    }
    if e.episode_len == 0 {
        bail!("config: env.episode_len must be >= 1");
    }
    if e.reference != "square" && e.reference != "sine" {
        bail!("config: env.reference must be 'square' or 'sine'");
    }
    let a = &cfg.agent;
    if !(0.0..=1.0).contains(&a.gamma) {
        bail!("config: agent.gamma must be in [0, 1]");
    }
    if a.critic_lr <= 0.0 || a.actor_lr <= 0.0 {
        bail!("config: agent learning rates must be positive");
    }
    if a.batch_size == 0 {
        bail!("config: agent.batch_size must be >= 1");
    }
    if a.updates_per_step == 0 {
        bail!("config: agent.updates_per_step must be >= 1");
    }
    if a.actor_hidden_order != "tanh-relu" && a.actor_hidden_order != "relu-tanh" {
        bail!("config: agent.actor_hidden_order must be 'tanh-relu' or 'relu-tanh'");
    }
    if a.reward_mode != "preserve" && a.reward_mode != "negate" {
        bail!("config: agent.reward_mode must be 'preserve' or 'negate'");
    }
    if !cfg.aero.is_finite() {
        bail!("config: aero coefficients must be finite");
    }
    if cfg.eval.seeds.is_empty() || cfg.eval.episodes == 0 {
        bail!("config: eval.seeds and eval.episodes must be non-empty/positive");
    }
    Ok(())
}

/// Loads and validates the effective configuration:
/// defaults, then the file, then flag overrides. The output directory falls
/// back to `$SYMRL_OUT`, then `./runs`.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<EffectiveConfig> {
    let mut cfg = default_config();

    if let Some(path) = path {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: FileConfig = toml::from_str(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(run) = file.run {
            merge!(
                cfg.run, run, variants, seeds, episodes, out_dir, jobs, checkpoint_every,
                log_steps
            );
        }
        if let Some(env) = file.env {
            merge!(
                cfg.env, env, dt, episode_len, init_phi_deg, init_p_deg, init_beta_deg,
                init_r_deg, action_bound_deg, divergence_bound_deg, reference,
                square_period_s, square_amplitude_deg, sine_amplitude_deg, sine_omega_rad_s
            );
        }
        if let Some(agent) = file.agent {
            merge!(
                cfg.agent, agent, critic_lr, actor_lr, tau, gamma, batch_size,
                buffer_capacity, updates_per_step, warmup, ou_sigma, ou_theta, ou_dt, hidden,
                actor_hidden_order, reward_mode
            );
        }
        if let Some(aero) = file.aero {
            cfg.aero = aero;
        }
        if let Some(sym) = file.symmetry {
            merge!(cfg.symmetry, sym, x_star_deg, identity_f, pairs, tolerance);
        }
        if let Some(eval) = file.eval {
            merge!(cfg.eval, eval, seeds, episodes);
        }
    }

    if let Some(v) = &overrides.variants {
        cfg.run.variants = v.clone();
    }
    if let Some(s) = &overrides.seeds {
        cfg.run.seeds = s.clone();
    }
    if let Some(e) = overrides.episodes {
        cfg.run.episodes = e;
    }
    if let Some(j) = overrides.jobs {
        cfg.run.jobs = j;
    }
    if let Some(out) = &overrides.out {
        cfg.run.out_dir = out.clone();
    }
    if cfg.run.out_dir.as_os_str().is_empty() {
        cfg.run.out_dir = std::env::var_os("SYMRL_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
    }

    validate(&cfg)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_derive() {
        let cfg = load_config(None, &Overrides::default()).unwrap();
        let env = cfg.env_config();
        assert_eq!(env.action_bound, 1.0);
        assert_eq!(env.divergence_bound, 10.0);
        assert!((env.init_phi - 30.0_f64.to_radians()).abs() < 1e-15);
        let agent = cfg.agent_config();
        assert_eq!(agent.batch_size, 256);
        assert_eq!(agent.hidden, [64, 64]);
        assert!(!agent.actor_hidden_swap);
    }

    #[test]
    fn echo_round_trips_exactly() {
        let cfg = load_config(None, &Overrides::default()).unwrap();
        let echo = cfg.echo_toml();
        let dir = std::env::temp_dir().join("symrl_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("echo.toml");
        std::fs::write(&path, &echo).unwrap();
        let back = load_config(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected_with_name() {
        let dir = std::env::temp_dir().join("symrl_cfg_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "[agent]\nlearning_rate = 0.1\n").unwrap();
        let err = load_config(Some(&path), &Overrides::default()).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("learning_rate"), "message was: {msg}");
    }

    #[test]
    fn semantic_validation_names_field() {
        let dir = std::env::temp_dir().join("symrl_cfg_test3");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad2.toml");
        std::fs::write(&path, "[run]\nepisodes = 0\n").unwrap();
        let err = load_config(Some(&path), &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("run.episodes"));
    }
}
