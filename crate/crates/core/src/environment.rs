//! MDP wrapper around the lateral dynamics: episode lifecycle, reference
//! signal generation, error-coordinate observations, reward shaping, and
//! termination handling.
//!
//! The agent observes `[e_phi, p, beta, r]` where `e_phi = phi - phi_ref`;
//! tracking in error coordinates puts the symmetry reference point at the
//! origin, so mirrored transitions remain valid training data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_continuous, rk4_step, AeroParams, ContinuousModel, ControlInput, LateralState};
use crate::math::Vec4;
use crate::{Error, Result};

/// Bank-angle reference signal. Values are radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSignal {
    /// Piecewise-constant wave; the level is redrawn uniformly from
    /// `[-amplitude, amplitude]` at the start of every period.
    Square { period_s: f64, amplitude: f64 },
    /// `amplitude * sin(omega * t)` with `t` in seconds; zero at `t = 0`.
    Sine { amplitude: f64, omega: f64 },
}

impl ReferenceSignal {
    /// Square wave with 3 s period and 30 deg amplitude bound.
    pub fn default_square() -> Self {
        ReferenceSignal::Square {
            period_s: 3.0,
            amplitude: 30.0_f64.to_radians(),
        }
    }

    /// Sine wave with 20 deg amplitude and 0.2*pi rad/s angular frequency.
    pub fn default_sine() -> Self {
        ReferenceSignal::Sine {
            amplitude: 20.0_f64.to_radians(),
            omega: 0.2 * std::f64::consts::PI,
        }
    }
}

/// Stateful reference evaluator. Square waves consume the provided RNG
/// stream once per period; queries must use non-decreasing step indices.
#[derive(Debug, Clone)]
pub struct ReferenceGenerator {
    signal: ReferenceSignal,
    dt: f64,
    current_period: Option<usize>,
    current_level: f64,
}

impl ReferenceGenerator {
    pub fn new(signal: ReferenceSignal, dt: f64) -> Self {
        Self {
            signal,
            dt,
            current_period: None,
            current_level: 0.0,
        }
    }

    /// Restart the phase; the next query redraws the square-wave level.
    pub fn reset(&mut self) {
        self.current_period = None;
        self.current_level = 0.0;
    }

    /// Reference value at step index `t` (time `t * dt`).
    pub fn reference_at(&mut self, t: usize, rng: &mut impl Rng) -> f64 {
        match self.signal {
            ReferenceSignal::Sine { amplitude, omega } => {
                amplitude * (omega * t as f64 * self.dt).sin()
            }
            ReferenceSignal::Square { period_s, amplitude } => {
                let steps_per_period = (period_s / self.dt).round().max(1.0) as usize;
                let period = t / steps_per_period;
                if self.current_period != Some(period) {
                    self.current_level = rng.random_range(-amplitude..=amplitude);
                    self.current_period = Some(period);
                }
                self.current_level
            }
        }
    }
}

/// What the agent sees: bank-angle tracking error plus the raw rates and
/// sideslip, `[e_phi, p, beta, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub e_phi: f64,
    pub p: f64,
    pub beta: f64,
    pub r: f64,
}

impl Observation {
    pub fn from_array(v: Vec4) -> Self {
        Self {
            e_phi: v[0],
            p: v[1],
            beta: v[2],
            r: v[3],
        }
    }

    pub fn to_array(self) -> Vec4 {
        [self.e_phi, self.p, self.beta, self.r]
    }
}

/// Raw state and reference value accompanying each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub state: LateralState,
    pub reference: f64,
    /// Action actually applied after clamping.
    pub applied: ControlInput,
    /// Step index of the new state (1-based within the episode).
    pub t: usize,
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    /// True only on state blow-up; reaching the step limit is not terminal.
    pub done: bool,
    pub info: StepInfo,
}

/// Environment parameters. Angles in radians, time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub dt: f64,
    pub episode_len: usize,
    /// Half-range of the uniform initial bank angle (rad).
    pub init_phi: f64,
    /// Half-range of the uniform initial roll rate (rad/s).
    pub init_p: f64,
    /// Half-range of the uniform initial sideslip (rad).
    pub init_beta: f64,
    /// Half-range of the uniform initial yaw rate (rad/s).
    pub init_r: f64,
    /// Actuator clamp (rad).
    pub action_bound: f64,
    /// Episode aborts (done = true) when any state magnitude exceeds this.
    pub divergence_bound: f64,
    pub reference: ReferenceSignal,
    pub aero: AeroParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            episode_len: 300,
            init_phi: 30.0_f64.to_radians(),
            init_p: 10.0_f64.to_radians(),
            init_beta: 30.0_f64.to_radians(),
            init_r: 10.0_f64.to_radians(),
            action_bound: 1.0,
            divergence_bound: 10.0,
            reference: ReferenceSignal::default_square(),
            aero: AeroParams::default(),
        }
    }
}

/// Per-step penalty: tracking errors pass through `clip(5e, -1, 1)` so the
/// band `0.2 < |e| < 1` saturates, then rates and control effort add linear
/// costs. Always non-positive.
pub fn reward(e_phi: f64, e_beta: f64, p: f64, r: f64, delta_a: f64, delta_r: f64) -> f64 {
    let clip = |e: f64| (5.0 * e).clamp(-1.0, 1.0).abs();
    -(10.0 * (clip(e_phi) + clip(e_beta)) + p.abs() + r.abs() + 0.01 * delta_a.abs() + 0.01 * delta_r.abs())
}

/// Aircraft tracking environment. Single-owner mutable state; run one
/// instance per training seed.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    model: ContinuousModel,
    reference: ReferenceGenerator,
    rng_init: ChaCha8Rng,
    rng_ref: ChaCha8Rng,
    state: LateralState,
    step_idx: usize,
    blown_up: bool,
    active: bool,
}

impl Environment {
    /// Builds the environment with two RNG streams derived from `seed`:
    /// one for initial states, one for square-wave reference levels.
    pub fn new(cfg: EnvConfig, seed: u64) -> Self {
        let mut rng_init = ChaCha8Rng::seed_from_u64(seed);
        rng_init.set_stream(0xE0);
        let mut rng_ref = ChaCha8Rng::seed_from_u64(seed);
        rng_ref.set_stream(0xE1);
        let reference = ReferenceGenerator::new(cfg.reference, cfg.dt);
        Self {
            model: build_continuous(&cfg.aero),
            cfg,
            reference,
            rng_init,
            rng_ref,
            state: LateralState::default(),
            step_idx: 0,
            blown_up: false,
            active: false,
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> LateralState {
        self.state
    }

    pub fn step_index(&self) -> usize {
        self.step_idx
    }

    /// Draws a fresh initial state, restarts the reference phase and the
    /// step counter, and returns the first observation.
    pub fn reset(&mut self) -> Observation {
        let c = &self.cfg;
        self.state = LateralState::new(
            self.rng_init.random_range(-c.init_phi..=c.init_phi),
            self.rng_init.random_range(-c.init_p..=c.init_p),
            self.rng_init.random_range(-c.init_beta..=c.init_beta),
            self.rng_init.random_range(-c.init_r..=c.init_r),
        );
        self.reference.reset();
        self.step_idx = 0;
        self.blown_up = false;
        self.active = true;
        self.observe()
    }

    fn observe(&mut self) -> Observation {
        let phi_ref = self.reference.reference_at(self.step_idx, &mut self.rng_ref);
        Observation {
            e_phi: self.state.phi - phi_ref,
            p: self.state.p,
            beta: self.state.beta,
            r: self.state.r,
        }
    }

    /// True when the episode can no longer be stepped (blow-up or the step
    /// limit was reached).
    pub fn finished(&self) -> bool {
        !self.active || self.blown_up || self.step_idx >= self.cfg.episode_len
    }

    /// Advances one step: clamps the action, integrates the dynamics with
    /// RK4, and computes the reward from the post-step errors together with
    /// the applied action. `done` is raised only on state blow-up.
    pub fn step(&mut self, action: ControlInput) -> Result<StepResult> {
        if self.finished() {
            return Err(Error::EpisodeFinished);
        }
        let applied = action.clamped(self.cfg.action_bound);
        self.state = rk4_step(&self.model, self.state, applied, self.cfg.dt);
        self.step_idx += 1;

        let phi_ref = self.reference.reference_at(self.step_idx, &mut self.rng_ref);
        let obs = Observation {
            e_phi: self.state.phi - phi_ref,
            p: self.state.p,
            beta: self.state.beta,
            r: self.state.r,
        };
        let rew = reward(
            obs.e_phi,
            obs.beta,
            obs.p,
            obs.r,
            applied.delta_a,
            applied.delta_r,
        );
        let blown = self
            .state
            .to_array()
            .iter()
            .any(|v| v.abs() > self.cfg.divergence_bound || !v.is_finite());
        self.blown_up = blown;
        Ok(StepResult {
            obs,
            reward: rew,
            done: blown,
            info: StepInfo {
                state: self.state,
                reference: phi_ref,
                applied,
                t: self.step_idx,
            },
        })
    }
}
