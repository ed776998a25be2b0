//! Reinforcement-learning control lab for aircraft lateral attitude tracking.
//!
//! The crate couples a linear lateral-dynamics simulator (bank angle, roll
//! rate, sideslip, yaw rate) with three off-policy actor-critic agents:
//!
//! * `ddpg`  — standard DDPG with a single critic and replay buffer,
//! * `sda`   — DDPG with symmetric data augmentation: every explored
//!   transition is mirrored through the state-space origin and stored
//!   alongside the original,
//! * `sca`   — DDPG with symmetric critic augmentation: explored and
//!   mirrored transitions feed two separate buffers and critics, and the
//!   shared actor is updated through both in a two-step policy iteration.
//!
//! All numerics are `f64` and every stochastic component draws from a seeded
//! counter-based generator, so runs are bit-reproducible.

pub mod agents;
pub mod dynamics;
pub mod environment;
pub mod evaluation;
pub mod math;
pub mod networks;
pub mod symmetry;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
