//! Versioned JSON checkpoints: layer sizes, activation tags, weights, and
//! optimizer state for every network, plus the update counters. JSON floats
//! round-trip f64 exactly, so save-then-load restores parameters bit for
//! bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentConfig, UpdateCounters, Variant};
use crate::networks::{AdamState, Mlp};
use crate::symmetry::AugmentationMap;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticCheckpoint {
    pub online: Mlp,
    pub target: Mlp,
    pub adam: AdamState,
}

/// Full agent snapshot minus the replay buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub variant: Variant,
    pub episode: usize,
    pub config: AgentConfig,
    pub augmentation: AugmentationMap,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub actor_adam: AdamState,
    pub critics: Vec<CriticCheckpoint>,
    pub counters: UpdateCounters,
}

impl Agent {
    /// Snapshot of the networks and optimizer state after `episode`
    /// completed episodes.
    pub fn checkpoint(&self, episode: usize) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            variant: self.variant,
            episode,
            config: self.cfg,
            augmentation: self.augmentation,
            actor: self.actor.clone(),
            actor_target: self.actor_target.clone(),
            actor_adam: self.actor_adam.clone(),
            critics: self
                .critics
                .iter()
                .map(|c| CriticCheckpoint {
                    online: c.online.clone(),
                    target: c.target.clone(),
                    adam: c.adam.clone(),
                })
                .collect(),
            counters: self.counters.clone(),
        }
    }

    /// Rebuilds an agent from a checkpoint with empty replay buffers and
    /// fresh RNG streams for `seed`.
    pub fn from_checkpoint(cp: &Checkpoint, seed: u64) -> Result<Self> {
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {})",
                cp.version, CHECKPOINT_VERSION
            )));
        }
        let mut agent = Agent::new(cp.variant, cp.config, cp.augmentation, seed);
        agent.actor = cp.actor.clone();
        agent.actor_target = cp.actor_target.clone();
        agent.actor_adam = cp.actor_adam.clone();
        if cp.critics.len() != agent.critics.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} critics, variant {} needs {}",
                cp.critics.len(),
                cp.variant,
                agent.critics.len()
            )));
        }
        for (pair, dump) in agent.critics.iter_mut().zip(cp.critics.iter()) {
            pair.online = dump.online.clone();
            pair.target = dump.target.clone();
            pair.adam = dump.adam.clone();
        }
        agent.counters = cp.counters.clone();
        Ok(agent)
    }
}

pub fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    let json = serde_json::to_string(cp)
        .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
    std::fs::write(path, json)
        .map_err(|e| Error::Persist(format!("write {}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| Error::Checkpoint(format!("parse {}: {e}", path.display())))
}
