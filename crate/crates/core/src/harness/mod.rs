//! Experiment orchestration: deployments, training and inference episodes,
//! the always-active baseline, the brute-force oracle, load-category
//! reporting and file formats.

pub mod config;
pub mod episode;
pub mod oracle;
pub mod persist;
pub mod report;
pub mod seeds;

use thiserror::Error;

pub use config::{ScenarioConfig, UeCountModel};
pub use episode::{
    run_baseline, run_inference, run_training_episode, train, EpisodeRecord, Model, Policy, RecordMode, TrainingRun,
};
pub use oracle::{oracle_sweep, sweep_scenario, OracleRow, OracleTable};
pub use report::{categorize_and_report, CategoryStats, LoadCategory, LoadReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("training finished with {have} experiences, below the {need} needed to fit normalizers")]
    NeverTrained { have: usize, need: usize },
    #[error("record mismatch: {0}")]
    Records(String),
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    ActionSpace(#[from] crate::actionspace::ActionSpaceError),
    #[error(transparent)]
    Traffic(#[from] crate::traffic::TrafficError),
    #[error(transparent)]
    Sim(#[from] crate::cellsim::SimError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Reward(#[from] crate::rewards::RewardError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Agent(#[from] crate::agent::AgentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
