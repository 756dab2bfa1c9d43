//! Double deep Q-learning of the variable ordering policy.

mod config;
mod replay;
mod trainer;

pub use config::{epsilon_at, ConfigError, Precision, TrainConfig};
pub use replay::ReplayBuffer;
pub use trainer::{
    ddqn_target, ddqn_target_from, random_baseline, run_policy, train, train_with, validate, validation_seed, EpsilonGreedy,
    Experience, LogRow, TrainError, TrainOutcome, ValidationResult, LOG_HEADER,
};
