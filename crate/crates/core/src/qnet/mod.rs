//! The deep Q-network heuristic: network, optimiser, checkpoints, rewards and
//! the epsilon-greedy training loop.

mod adam;
mod checkpoint;
mod network;
mod scorer;
mod train;

use std::path::PathBuf;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    checkpoint_to_string, load_checkpoint, load_checkpoint_for, parse_checkpoint, save_checkpoint, SCHEMA,
};
pub use network::{
    forward, forward_batch, init_network, loss_and_gradients, QNetworkParams, CHANNELS, DEFAULT_HIDDEN, KERNEL,
};
pub use scorer::DrillScorer;
pub use train::{
    discounted_targets, reward, reward_from_sets, train, EpisodeRecord, ReplayBuffer, TrainReport, TrainingConfig,
    Transition, UpdateRecord,
};

use crate::concept::UnknownName;

#[derive(Debug, Error)]
pub enum QNetError {
    #[error("{what}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch { what: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error(transparent)]
    UnknownName(#[from] UnknownName),
    #[error("no learning problems to train on")]
    NoProblems,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}
