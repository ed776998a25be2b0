//! Ring replay buffer with no-replacement batch sampling.

use rand::Rng;

use crate::symmetry::Transition;
use crate::{Error, Result};

/// Ring storage of transitions. Memory grows with use and only wraps once
/// `capacity` samples have been stored; the oldest sample is overwritten
/// first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            data: Vec::new(),
            capacity,
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.data[index]
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Draws `n` distinct storage indices uniformly (no replacement within
    /// the batch). Errors when fewer than `n` samples are stored.
    pub fn sample_indices(&self, rng: &mut impl Rng, n: usize) -> Result<Vec<usize>> {
        if self.data.len() < n {
            return Err(Error::InsufficientSamples {
                have: self.data.len(),
                need: n,
            });
        }
        Ok(rand::seq::index::sample(rng, self.data.len(), n).into_vec())
    }
}

/// Column-major view of a sampled batch, laid out for the network kernels.
#[derive(Debug, Clone, Default)]
pub struct TransitionBatch {
    pub n: usize,
    /// Row-major `n x 4`.
    pub obs: Vec<f64>,
    /// Row-major `n x 2`.
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Row-major `n x 4`.
    pub next_obs: Vec<f64>,
    /// 0.0 or 1.0 per sample.
    pub dones: Vec<f64>,
}

impl TransitionBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fill(&mut self, buffer: &ReplayBuffer, indices: &[usize]) {
        self.n = indices.len();
        self.obs.clear();
        self.actions.clear();
        self.rewards.clear();
        self.next_obs.clear();
        self.dones.clear();
        for &i in indices {
            let t = buffer.get(i);
            self.obs.extend_from_slice(&t.x);
            self.actions.extend_from_slice(&t.a);
            self.rewards.push(t.r);
            self.next_obs.extend_from_slice(&t.x_next);
            self.dones.push(if t.done { 1.0 } else { 0.0 });
        }
    }

    /// Builds a batch directly from transitions, mainly for tests.
    pub fn from_transitions(transitions: &[Transition]) -> Self {
        let mut batch = Self::new();
        batch.n = transitions.len();
        for t in transitions {
            batch.obs.extend_from_slice(&t.x);
            batch.actions.extend_from_slice(&t.a);
            batch.rewards.push(t.r);
            batch.next_obs.extend_from_slice(&t.x_next);
            batch.dones.push(if t.done { 1.0 } else { 0.0 });
        }
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(tag: f64) -> Transition {
        Transition {
            x: [tag, 0.0, 0.0, 0.0],
            a: [0.0, 0.0],
            r: -tag,
            x_next: [tag + 1.0, 0.0, 0.0, 0.0],
            done: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest_when_full() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(transition(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let stored: Vec<f64> = (0..3).map(|i| buf.get(i).x[0]).collect();
        // slots 0 and 1 were overwritten by samples 3 and 4
        assert_eq!(stored, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_requires_enough_samples() {
        let mut buf = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(buf.sample_indices(&mut rng, 1).is_err());
        for i in 0..4 {
            buf.push(transition(i as f64));
        }
        assert!(buf.sample_indices(&mut rng, 5).is_err());
        assert!(buf.sample_indices(&mut rng, 4).is_ok());
    }

    #[test]
    fn batches_have_distinct_in_range_indices() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..50 {
            buf.push(transition(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let idx = buf.sample_indices(&mut rng, 32).unwrap();
            assert_eq!(idx.len(), 32);
            let mut seen = std::collections::HashSet::new();
            for i in idx {
                assert!(i < buf.len());
                assert!(seen.insert(i), "duplicate index {i}");
            }
        }
    }

    #[test]
    fn batch_fill_matches_storage() {
        let mut buf = ReplayBuffer::new(8);
        for i in 0..8 {
            buf.push(transition(i as f64));
        }
        let mut batch = TransitionBatch::new();
        batch.fill(&buf, &[2, 5]);
        assert_eq!(batch.n, 2);
        assert_eq!(batch.obs[0], 2.0);
        assert_eq!(batch.obs[4], 5.0);
        assert_eq!(batch.rewards, vec![-2.0, -5.0]);
        assert_eq!(batch.next_obs[0], 3.0);
        assert_eq!(batch.dones, vec![0.0, 0.0]);
    }
}
