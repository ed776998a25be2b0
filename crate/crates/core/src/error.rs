use thiserror::Error;

/// Errors surfaced by the simulation and training primitives.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("network architectures differ: {0}")]
    ArchitectureMismatch(String),

    #[error("matrix-exponential series did not reach tolerance {tol} in {max_terms} terms")]
    SeriesDivergence { tol: f64, max_terms: usize },

    #[error("episode already finished; call reset() before stepping")]
    EpisodeFinished,

    #[error("replay buffer holds {have} samples, need {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("no symmetry case applies for the given model and reference point")]
    NoSymmetryCase,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("persist: {0}")]
    Persist(String),
}
