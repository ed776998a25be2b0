//! The three agents (DDPG, DDPG-SDA, DDPG-SCA): replay storage, Bellman
//! targets, the per-step gradient updates, and the training loop.
//!
//! Sign convention: rewards are penalties (always <= 0) and returns are
//! maximized, so the critic regresses onto standard Bellman targets and the
//! actor ascends the critic. SCA runs a two-step policy iteration per
//! environment step: critic 1 and the actor update on an explored-data
//! batch, then critic 2 and the actor update again on a mirrored-data batch.

mod checkpoint;
mod replay;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CriticCheckpoint};
pub use replay::{ReplayBuffer, TransitionBatch};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ControlInput;
use crate::environment::{Environment, Observation};
use crate::evaluation::{average_return, EpisodeStats, RunRecord, StepLog};
use crate::math::{Vec2, Vec4};
use crate::networks::{
    adam_step, soft_update, Activation, AdamState, BatchCache, ForwardScratch, Gradients, Mlp,
    OuNoise,
};
use crate::symmetry::{augment, q_symmetry_gap, AugmentationMap, Transition};
use crate::Result;

const OBS_DIM: usize = 4;
const ACT_DIM: usize = 2;
const Q_IN_DIM: usize = OBS_DIM + ACT_DIM;

/// Which agent is being trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ddpg,
    Sda,
    Sca,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Ddpg, Variant::Sda, Variant::Sca];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ddpg => "ddpg",
            Variant::Sda => "sda",
            Variant::Sca => "sca",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ddpg" => Ok(Variant::Ddpg),
            "sda" => Ok(Variant::Sda),
            "sca" => Ok(Variant::Sca),
            other => Err(format!("unknown variant '{other}' (expected ddpg, sda or sca)")),
        }
    }
}

/// Training hyperparameters. Defaults follow the usual DDPG settings for
/// this task: lr 1e-3 on both networks, tau 0.01, gamma 0.99, batch 256,
/// 64x64 hidden layers, one gradient update per environment step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub tau: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub updates_per_step: usize,
    /// Minimum samples per relevant buffer before updates begin; the
    /// effective threshold is `max(warmup, batch_size)`.
    pub warmup: usize,
    pub ou_sigma: f64,
    pub ou_theta: f64,
    pub ou_dt: f64,
    pub hidden: [usize; 2],
    /// Actor hidden activations are tanh then ReLU; set to swap the order.
    pub actor_hidden_swap: bool,
    pub action_bound: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
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
            actor_hidden_swap: false,
            action_bound: 1.0,
        }
    }
}

/// Gradient-update counts per network.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounters {
    pub critic: Vec<u64>,
    pub actor: u64,
}

#[derive(Debug, Clone)]
struct CriticPair {
    online: Mlp,
    target: Mlp,
    adam: AdamState,
}

/// Scratch for Bellman-target evaluation.
#[derive(Debug, Clone, Default)]
pub struct BellmanScratch {
    actions: Vec<f64>,
    critic_in: Vec<f64>,
    q: Vec<f64>,
    tmp: ForwardScratch,
}

/// Bellman targets `z_i = r_i + gamma (1 - d_i) Q_target(x'_i, mu_target(x'_i))`.
pub fn bellman_target_into(
    critic_target: &Mlp,
    actor_target: &Mlp,
    batch: &TransitionBatch,
    gamma: f64,
    scratch: &mut BellmanScratch,
    z: &mut Vec<f64>,
) -> Result<()> {
    actor_target.forward_batch_into(&batch.next_obs, &mut scratch.actions, &mut scratch.tmp)?;
    scratch.critic_in.clear();
    for i in 0..batch.n {
        scratch
            .critic_in
            .extend_from_slice(&batch.next_obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
        scratch
            .critic_in
            .extend_from_slice(&scratch.actions[i * ACT_DIM..(i + 1) * ACT_DIM]);
    }
    critic_target.forward_batch_into(&scratch.critic_in, &mut scratch.q, &mut scratch.tmp)?;
    z.clear();
    for i in 0..batch.n {
        z.push(batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * scratch.q[i]);
    }
    Ok(())
}

/// Allocating convenience wrapper around [`bellman_target_into`].
pub fn bellman_target(
    critic_target: &Mlp,
    actor_target: &Mlp,
    batch: &TransitionBatch,
    gamma: f64,
) -> Result<Vec<f64>> {
    let mut scratch = BellmanScratch::default();
    let mut z = Vec::new();
    bellman_target_into(critic_target, actor_target, batch, gamma, &mut scratch, &mut z)?;
    Ok(z)
}

#[derive(Debug, Clone, Default)]
struct UpdateScratch {
    batch: TransitionBatch,
    batch2: TransitionBatch,
    bellman: BellmanScratch,
    z: Vec<f64>,
    q_in: Vec<f64>,
    upstream: Vec<f64>,
    actor_upstream: Vec<f64>,
    dinput: Vec<f64>,
    cache_critic: BatchCache,
    cache_actor: BatchCache,
    cache_q: BatchCache,
    grads_critic: Gradients,
    grads_actor: Gradients,
}

/// An off-policy actor-critic agent. Single-owner mutable state; run one
/// instance per training seed.
#[derive(Debug, Clone)]
pub struct Agent {
    variant: Variant,
    cfg: AgentConfig,
    augmentation: AugmentationMap,
    seed: u64,
    actor: Mlp,
    actor_target: Mlp,
    actor_adam: AdamState,
    critics: Vec<CriticPair>,
    buffers: Vec<ReplayBuffer>,
    noise: OuNoise,
    noise_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    counters: UpdateCounters,
    scratch: UpdateScratch,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Agent {
    pub fn new(variant: Variant, cfg: AgentConfig, augmentation: AugmentationMap, seed: u64) -> Self {
        let mut init_rng = stream_rng(seed, 0xA0);
        let [h1, h2] = cfg.hidden;
        let actor_acts = if cfg.actor_hidden_swap {
            [Activation::Relu, Activation::Tanh, Activation::Tanh]
        } else {
            [Activation::Tanh, Activation::Relu, Activation::Tanh]
        };
        let actor = Mlp::new(&[OBS_DIM, h1, h2, ACT_DIM], &actor_acts, cfg.action_bound, &mut init_rng);
        let critic_count = if variant == Variant::Sca { 2 } else { 1 };
        let critics = (0..critic_count)
            .map(|_| {
                let online = Mlp::new(
                    &[Q_IN_DIM, h1, h2, 1],
                    &[Activation::Relu, Activation::Relu, Activation::Linear],
                    1.0,
                    &mut init_rng,
                );
                CriticPair {
                    target: online.clone(),
                    adam: AdamState::new(&online, cfg.critic_lr),
                    online,
                }
            })
            .collect();
        let buffer_count = if variant == Variant::Sca { 2 } else { 1 };
        let buffers = (0..buffer_count)
            .map(|_| ReplayBuffer::new(cfg.buffer_capacity))
            .collect();
        Self {
            variant,
            augmentation,
            seed,
            actor_target: actor.clone(),
            actor_adam: AdamState::new(&actor, cfg.actor_lr),
            actor,
            critics,
            buffers,
            noise: OuNoise::new(cfg.ou_sigma, cfg.ou_theta, cfg.ou_dt),
            noise_rng: stream_rng(seed, 0xA1),
            sample_rng: stream_rng(seed, 0xA2),
            counters: UpdateCounters {
                critic: vec![0; critic_count],
                actor: 0,
            },
            scratch: UpdateScratch::default(),
            cfg,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn augmentation(&self) -> &AugmentationMap {
        &self.augmentation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counters(&self) -> &UpdateCounters {
        &self.counters
    }

    pub fn buffer_len(&self, k: usize) -> usize {
        self.buffers[k].len()
    }

    pub fn buffer_sizes(&self) -> Vec<usize> {
        self.buffers.iter().map(|b| b.len()).collect()
    }

    pub fn buffer(&self, k: usize) -> &ReplayBuffer {
        &self.buffers[k]
    }

    pub fn critic_count(&self) -> usize {
        self.critics.len()
    }

    pub fn critic(&self, k: usize) -> &Mlp {
        &self.critics[k].online
    }

    pub fn critic_target(&self, k: usize) -> &Mlp {
        &self.critics[k].target
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn noise_state(&self) -> Vec2 {
        self.noise.state()
    }

    pub fn reset_noise(&mut self) {
        self.noise.reset();
    }

    /// Policy action for `obs`: deterministic `mu(obs)` when evaluating,
    /// `mu(obs)` plus OU noise when exploring, clamped to the action bound.
    pub fn act(&mut self, obs: &Observation, explore: bool) -> ControlInput {
        let out = self.actor.forward(&obs.to_array());
        let mut action = [out[0], out[1]];
        if explore {
            let eps = self.noise.sample(&mut self.noise_rng);
            action[0] += eps[0];
            action[1] += eps[1];
        }
        ControlInput::from_array(action).clamped(self.cfg.action_bound)
    }

    /// Stores one explored transition. SDA additionally stores its mirror in
    /// the same buffer; SCA routes the mirror to the second buffer.
    pub fn store(&mut self, t: Transition) {
        match self.variant {
            Variant::Ddpg => self.buffers[0].push(t),
            Variant::Sda => {
                let mirrored = augment(&t, &self.augmentation);
                self.buffers[0].push(t);
                self.buffers[0].push(mirrored);
            }
            Variant::Sca => {
                let mirrored = augment(&t, &self.augmentation);
                self.buffers[0].push(t);
                self.buffers[1].push(mirrored);
            }
        }
    }

    /// True once every relevant buffer holds a full warmup of samples.
    pub fn ready(&self) -> bool {
        let need = self.cfg.batch_size.max(self.cfg.warmup);
        self.buffers.iter().all(|b| b.len() >= need)
    }

    /// Samples fresh batches and runs one update appropriate to the variant.
    pub fn update(&mut self) -> Result<()> {
        match self.variant {
            Variant::Ddpg | Variant::Sda => {
                let idx = self.buffers[0].sample_indices(&mut self.sample_rng, self.cfg.batch_size)?;
                let mut batch = std::mem::take(&mut self.scratch.batch);
                batch.fill(&self.buffers[0], &idx);
                let result = self.ddpg_update(&batch);
                self.scratch.batch = batch;
                result
            }
            Variant::Sca => {
                let idx1 = self.buffers[0].sample_indices(&mut self.sample_rng, self.cfg.batch_size)?;
                let idx2 = self.buffers[1].sample_indices(&mut self.sample_rng, self.cfg.batch_size)?;
                let mut batch1 = std::mem::take(&mut self.scratch.batch);
                let mut batch2 = std::mem::take(&mut self.scratch.batch2);
                batch1.fill(&self.buffers[0], &idx1);
                batch2.fill(&self.buffers[1], &idx2);
                let result = self.sca_update(&batch1, &batch2);
                self.scratch.batch = batch1;
                self.scratch.batch2 = batch2;
                result
            }
        }
    }

    /// One DDPG update on `batch`: critic regression toward the Bellman
    /// targets, an actor ascent step through the critic, then soft target
    /// updates.
    pub fn ddpg_update(&mut self, batch: &TransitionBatch) -> Result<()> {
        self.update_critic(0, batch)?;
        self.update_actor_through(0, batch)?;
        self.soft_update_pair(0)
    }

    /// Two-step policy iteration: step 1 trains critic 1 and the actor on
    /// the explored batch, step 2 trains critic 2 and the (just-updated)
    /// actor on the mirrored batch. Each step soft-updates its critic target
    /// and the actor target.
    pub fn sca_update(&mut self, batch1: &TransitionBatch, batch2: &TransitionBatch) -> Result<()> {
        self.update_critic(0, batch1)?;
        self.update_actor_through(0, batch1)?;
        self.soft_update_pair(0)?;
        self.update_critic(1, batch2)?;
        self.update_actor_through(1, batch2)?;
        self.soft_update_pair(1)
    }

    /// Critic `k` regression: one Adam step on the mean squared Bellman
    /// residual. Leaves actor parameters untouched.
    fn update_critic(&mut self, k: usize, batch: &TransitionBatch) -> Result<()> {
        let scratch = &mut self.scratch;
        let pair = &mut self.critics[k];
        bellman_target_into(
            &pair.target,
            &self.actor_target,
            batch,
            self.cfg.gamma,
            &mut scratch.bellman,
            &mut scratch.z,
        )?;

        scratch.q_in.clear();
        for i in 0..batch.n {
            scratch
                .q_in
                .extend_from_slice(&batch.obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
            scratch
                .q_in
                .extend_from_slice(&batch.actions[i * ACT_DIM..(i + 1) * ACT_DIM]);
        }
        pair.online.forward_batch(&scratch.q_in, &mut scratch.cache_critic)?;

        let inv_n = 1.0 / batch.n as f64;
        scratch.upstream.clear();
        scratch.upstream.extend(
            scratch
                .cache_critic
                .output()
                .iter()
                .zip(scratch.z.iter())
                .map(|(q, z)| 2.0 * (q - z) * inv_n),
        );
        pair.online.backward_batch(
            &scratch.cache_critic,
            &scratch.upstream,
            Some(&mut scratch.grads_critic),
            None,
        )?;
        adam_step(&mut pair.online, &scratch.grads_critic, &mut pair.adam)?;
        self.counters.critic[k] += 1;
        Ok(())
    }

    /// Actor ascent through critic `k` on the batch's observations. Only
    /// the critic's input gradient is evaluated; its parameters are never
    /// touched.
    fn update_actor_through(&mut self, k: usize, batch: &TransitionBatch) -> Result<()> {
        let scratch = &mut self.scratch;
        let pair = &self.critics[k];
        self.actor.forward_batch(&batch.obs, &mut scratch.cache_actor)?;

        scratch.q_in.clear();
        for i in 0..batch.n {
            scratch
                .q_in
                .extend_from_slice(&batch.obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
            let pi = &scratch.cache_actor.output()[i * ACT_DIM..(i + 1) * ACT_DIM];
            scratch.q_in.extend_from_slice(pi);
        }
        pair.online.forward_batch(&scratch.q_in, &mut scratch.cache_q)?;

        // ascend mean Q: dL/dQ = -1/n
        let inv_n = 1.0 / batch.n as f64;
        scratch.upstream.clear();
        scratch.upstream.resize(batch.n, -inv_n);
        pair.online.backward_batch(
            &scratch.cache_q,
            &scratch.upstream,
            None,
            Some(&mut scratch.dinput),
        )?;

        scratch.actor_upstream.clear();
        for i in 0..batch.n {
            scratch
                .actor_upstream
                .extend_from_slice(&scratch.dinput[i * Q_IN_DIM + OBS_DIM..(i + 1) * Q_IN_DIM]);
        }
        self.actor.backward_batch(
            &scratch.cache_actor,
            &scratch.actor_upstream,
            Some(&mut scratch.grads_actor),
            None,
        )?;
        adam_step(&mut self.actor, &scratch.grads_actor, &mut self.actor_adam)?;
        self.counters.actor += 1;
        Ok(())
    }

    fn soft_update_pair(&mut self, k: usize) -> Result<()> {
        let pair = &mut self.critics[k];
        soft_update(&mut pair.target, &pair.online, self.cfg.tau)?;
        soft_update(&mut self.actor_target, &self.actor, self.cfg.tau)
    }
}

/// Options for [`train`].
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub episodes: usize,
    /// Episode cadence for checkpoint callbacks and the critic-symmetry
    /// probe; 0 disables both.
    pub checkpoint_every: usize,
    /// Probe pairs for the critic-symmetry diagnostic.
    pub q_probe_count: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            episodes: 1,
            checkpoint_every: 0,
            q_probe_count: 128,
        }
    }
}

/// Runs the interaction loop: act, step, store, and (once warmed up) one
/// update block per environment step. Fully deterministic given the agent
/// and environment seeds. `on_checkpoint` fires at the configured episode
/// cadence with the 1-based episode count.
pub fn train<F>(
    agent: &mut Agent,
    env: &mut Environment,
    opts: &TrainOptions,
    mut on_checkpoint: F,
) -> Result<RunRecord>
where
    F: FnMut(usize, &Agent) -> Result<()>,
{
    let mut probe_rng = stream_rng(agent.seed(), 0xA3);
    let probes: Vec<(Vec4, Vec2)> = (0..opts.q_probe_count)
        .map(|_| {
            (
                core::array::from_fn(|_| probe_rng.random_range(-0.5..0.5)),
                core::array::from_fn(|_| probe_rng.random_range(-1.0..1.0)),
            )
        })
        .collect();

    let mut record = RunRecord::new(agent.variant(), agent.seed());
    for episode in 0..opts.episodes {
        let mut obs = env.reset();
        agent.reset_noise();
        let mut episode_return = 0.0;
        let mut steps_this_episode = 0usize;
        loop {
            let action = agent.act(&obs, true);
            let step = env.step(action)?;
            agent.store(Transition {
                x: obs.to_array(),
                a: step.info.applied.to_array(),
                r: step.reward,
                x_next: step.obs.to_array(),
                done: step.done,
            });
            if agent.ready() {
                for _ in 0..agent.config().updates_per_step {
                    agent.update()?;
                }
            }
            episode_return += step.reward;
            steps_this_episode += 1;
            record.steps.push(StepLog {
                episode,
                t: step.info.t,
                phi: step.info.state.phi,
                p: step.info.state.p,
                beta: step.info.state.beta,
                r: step.info.state.r,
                phi_ref: step.info.reference,
                delta_a: step.info.applied.delta_a,
                delta_r: step.info.applied.delta_r,
                reward: step.reward,
                done: step.done,
            });
            obs = step.obs;
            if env.finished() {
                break;
            }
        }

        let cadence_hit =
            opts.checkpoint_every > 0 && (episode + 1) % opts.checkpoint_every == 0;
        let q_sym_gap = if cadence_hit && !probes.is_empty() {
            let total: f64 = (0..agent.critic_count())
                .map(|k| q_symmetry_gap(agent.critic(k), &probes))
                .sum();
            Some(total / agent.critic_count() as f64)
        } else {
            None
        };
        record.episode_returns.push(episode_return);
        record.episodes.push(EpisodeStats {
            episode,
            episode_return,
            steps: steps_this_episode,
            buffer_sizes: agent.buffer_sizes(),
            critic_updates: agent.counters().critic.clone(),
            actor_updates: agent.counters().actor,
            q_sym_gap,
        });
        if cadence_hit {
            on_checkpoint(episode + 1, agent)?;
        }
    }
    record.average_return_100 = average_return(&record.episode_returns, 100);
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::EnvConfig;

    fn small_config() -> AgentConfig {
        AgentConfig {
            batch_size: 8,
            warmup: 8,
            hidden: [16, 16],
            ..AgentConfig::default()
        }
    }

    fn seeded_transition(rng: &mut impl Rng) -> Transition {
        Transition {
            x: core::array::from_fn(|_| rng.random_range(-0.5..0.5)),
            a: core::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            r: rng.random_range(-20.0..0.0),
            x_next: core::array::from_fn(|_| rng.random_range(-0.5..0.5)),
            done: false,
        }
    }

    fn filled_agent(variant: Variant, cfg: AgentConfig, seed: u64, n: usize) -> Agent {
        let mut agent = Agent::new(variant, cfg, AugmentationMap::default(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        for _ in 0..n {
            agent.store(seeded_transition(&mut rng));
        }
        agent
    }

    #[test]
    fn zero_actor_acts_zero_without_exploration() {
        let mut agent = Agent::new(
            Variant::Ddpg,
            small_config(),
            AugmentationMap::default(),
            0,
        );
        agent.actor = Mlp::zeroed(
            &[4, 16, 16, 2],
            &[Activation::Tanh, Activation::Relu, Activation::Tanh],
            1.0,
        );
        let obs = Observation::from_array([0.2, -0.1, 0.05, 0.0]);
        assert_eq!(agent.act(&obs, false), ControlInput::new(0.0, 0.0));
        // deterministic evaluation
        let a1 = agent.act(&obs, false);
        let a2 = agent.act(&obs, false);
        assert_eq!(a1, a2);
    }

    #[test]
    fn exploration_offset_equals_noise_state() {
        let mut agent = Agent::new(
            Variant::Ddpg,
            small_config(),
            AugmentationMap::default(),
            3,
        );
        agent.actor = Mlp::zeroed(
            &[4, 16, 16, 2],
            &[Activation::Tanh, Activation::Relu, Activation::Tanh],
            1.0,
        );
        let obs = Observation::from_array([0.1, 0.0, -0.2, 0.3]);
        let action = agent.act(&obs, true);
        let eps = agent.noise_state();
        assert_eq!(action.to_array(), eps);
    }

    #[test]
    fn store_bookkeeping_per_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ddpg = Agent::new(Variant::Ddpg, small_config(), AugmentationMap::default(), 0);
        let mut sda = Agent::new(Variant::Sda, small_config(), AugmentationMap::default(), 0);
        let mut sca = Agent::new(Variant::Sca, small_config(), AugmentationMap::default(), 0);
        for k in 1..=20 {
            let t = seeded_transition(&mut rng);
            ddpg.store(t);
            sda.store(t);
            sca.store(t);
            assert_eq!(ddpg.buffer_sizes(), vec![k]);
            assert_eq!(sda.buffer_sizes(), vec![2 * k]);
            assert_eq!(sca.buffer_sizes(), vec![k, k]);
        }
    }

    #[test]
    fn sda_buffer_interleaves_exact_mirrors() {
        let cfg = AgentConfig {
            ou_sigma: 0.0,
            ou_theta: 0.0,
            ..small_config()
        };
        let mut agent = Agent::new(Variant::Sda, cfg, AugmentationMap::default(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            agent.store(seeded_transition(&mut rng));
        }
        let buf = agent.buffer(0);
        for k in 0..25 {
            let explored = buf.get(2 * k);
            let mirrored = buf.get(2 * k + 1);
            for i in 0..4 {
                assert_eq!(mirrored.x[i], -explored.x[i]);
                assert_eq!(mirrored.x_next[i], -explored.x_next[i]);
            }
            assert_eq!(mirrored.a, [-explored.a[0], -explored.a[1]]);
            assert_eq!(mirrored.r, explored.r);
            assert_eq!(mirrored.done, explored.done);
        }
    }

    #[test]
    fn bellman_target_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let transitions: Vec<Transition> = (0..6).map(|_| seeded_transition(&mut rng)).collect();
        let batch = TransitionBatch::from_transitions(&transitions);
        let agent = Agent::new(Variant::Ddpg, small_config(), AugmentationMap::default(), 2);

        // gamma = 0 reduces to the rewards
        let z = bellman_target(agent.critic_target(0), agent.actor_target(), &batch, 0.0).unwrap();
        assert_eq!(z, batch.rewards);

        // terminal samples mask the bootstrap term
        let mut terminal = transitions.clone();
        for t in terminal.iter_mut() {
            t.done = true;
        }
        let batch_t = TransitionBatch::from_transitions(&terminal);
        let z =
            bellman_target(agent.critic_target(0), agent.actor_target(), &batch_t, 0.99).unwrap();
        assert_eq!(z, batch_t.rewards);

        // zero-weight networks bootstrap zero
        let zero_critic = Mlp::zeroed(
            &[6, 16, 16, 1],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            1.0,
        );
        let zero_actor = Mlp::zeroed(
            &[4, 16, 16, 2],
            &[Activation::Tanh, Activation::Relu, Activation::Tanh],
            1.0,
        );
        let z = bellman_target(&zero_critic, &zero_actor, &batch, 0.99).unwrap();
        assert_eq!(z, batch.rewards);
    }

    #[test]
    fn critic_loss_decreases_on_frozen_batch_with_small_lr() {
        let cfg = AgentConfig {
            critic_lr: 1e-5,
            actor_lr: 1e-5,
            tau: 0.0,
            ..small_config()
        };
        let mut agent = filled_agent(Variant::Ddpg, cfg, 21, 64);
        let idx: Vec<usize> = (0..8).collect();
        let mut batch = TransitionBatch::new();
        batch.fill(agent.buffer(0), &idx);

        let z = bellman_target(agent.critic_target(0), agent.actor_target(), &batch, cfg.gamma)
            .unwrap();
        let loss = |agent: &Agent| -> f64 {
            let mut total = 0.0;
            for i in 0..batch.n {
                let mut input = [0.0; 6];
                input[..4].copy_from_slice(&batch.obs[i * 4..(i + 1) * 4]);
                input[4..].copy_from_slice(&batch.actions[i * 2..(i + 1) * 2]);
                let q = agent.critic(0).forward(&input)[0];
                total += (q - z[i]).powi(2);
            }
            total / batch.n as f64
        };
        let before = loss(&agent);
        let targets_before = (agent.critic_target(0).clone(), agent.actor_target().clone());
        agent.ddpg_update(&batch).unwrap();
        let after = loss(&agent);
        assert!(after < before, "loss {before} -> {after}");
        // tau = 0 leaves the targets untouched
        assert_eq!(&targets_before.0, agent.critic_target(0));
        assert_eq!(&targets_before.1, agent.actor_target());
        assert_eq!(agent.counters().critic, vec![1]);
        assert_eq!(agent.counters().actor, 1);
    }

    #[test]
    fn critic_update_never_touches_actor_and_vice_versa() {
        let mut agent = filled_agent(Variant::Ddpg, small_config(), 31, 64);
        let idx: Vec<usize> = (8..16).collect();
        let mut batch = TransitionBatch::new();
        batch.fill(agent.buffer(0), &idx);

        let actor_before = agent.actor.clone();
        agent.update_critic(0, &batch).unwrap();
        assert_eq!(actor_before, agent.actor);

        let critic_before = agent.critic(0).clone();
        agent.update_actor_through(0, &batch).unwrap();
        assert_eq!(&critic_before, agent.critic(0));
        assert_ne!(actor_before, agent.actor);
    }

    #[test]
    fn sca_counters_and_sequential_actor_updates() {
        let mut agent = filled_agent(Variant::Sca, small_config(), 41, 64);
        let idx: Vec<usize> = (0..8).collect();
        let mut batch = TransitionBatch::new();
        batch.fill(agent.buffer(0), &idx);

        // make the two critics identical so the only difference from a fused
        // step is the sequencing
        agent.critics[1] = agent.critics[0].clone();
        let mut fused = agent.clone();

        agent.sca_update(&batch, &batch).unwrap();
        assert_eq!(agent.counters().critic, vec![1, 1]);
        assert_eq!(agent.counters().actor, 2);
        assert_eq!(
            agent.counters().actor,
            agent.counters().critic.iter().sum::<u64>()
        );

        // single double-learning-rate actor step through the same critic
        fused.actor_adam.lr *= 2.0;
        fused.update_critic(0, &batch).unwrap();
        fused.update_actor_through(0, &batch).unwrap();
        let mut diff = 0.0_f64;
        for (a, b) in agent
            .actor
            .layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .zip(fused.actor.layers.iter().flat_map(|l| l.weights.iter()))
        {
            diff = diff.max((a - b).abs());
        }
        assert!(diff > 1e-12, "sequential and fused actor updates coincided");
    }

    #[test]
    fn sca_tau_one_copies_all_targets() {
        let cfg = AgentConfig {
            tau: 1.0,
            ..small_config()
        };
        let mut agent = filled_agent(Variant::Sca, cfg, 51, 64);
        agent.update().unwrap();
        assert_eq!(agent.critic(0), agent.critic_target(0));
        assert_eq!(agent.critic(1), agent.critic_target(1));
        assert_eq!(agent.actor(), agent.actor_target());
    }

    #[test]
    fn update_requires_enough_samples() {
        let mut agent = filled_agent(Variant::Ddpg, small_config(), 61, 4);
        assert!(!agent.ready());
        assert!(matches!(
            agent.update(),
            Err(crate::Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn train_is_deterministic_and_respects_warmup() {
        let env_cfg = EnvConfig::default();
        let agent_cfg = AgentConfig {
            warmup: 100_000, // never updates
            ..small_config()
        };
        let opts = TrainOptions {
            episodes: 1,
            ..TrainOptions::default()
        };
        let run = |seed: u64| {
            let mut env = Environment::new(env_cfg, seed);
            let mut agent = Agent::new(Variant::Sda, agent_cfg, AugmentationMap::default(), seed);
            train(&mut agent, &mut env, &opts, |_, _| Ok(())).unwrap()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a, b);
        // sda stores two transitions per environment step
        assert_eq!(a.episodes[0].buffer_sizes, vec![2 * a.episodes[0].steps]);
        assert_eq!(a.episodes[0].actor_updates, 0);
        assert_eq!(a.average_return_100, vec![a.episode_returns[0]]);
    }

    #[test]
    fn train_emits_checkpoint_callbacks_and_q_probe() {
        let env_cfg = EnvConfig::default();
        let opts = TrainOptions {
            episodes: 4,
            checkpoint_every: 2,
            q_probe_count: 16,
        };
        let mut env = Environment::new(env_cfg, 1);
        let mut agent = Agent::new(Variant::Ddpg, small_config(), AugmentationMap::default(), 1);
        let mut fired = Vec::new();
        let record = train(&mut agent, &mut env, &opts, |ep, _| {
            fired.push(ep);
            Ok(())
        })
        .unwrap();
        assert_eq!(fired, vec![2, 4]);
        assert!(record.episodes[1].q_sym_gap.is_some());
        assert!(record.episodes[0].q_sym_gap.is_none());
    }
}
