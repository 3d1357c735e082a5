//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Durations are integer milliseconds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::actionspace::{ActionSpace, DEFAULT_CYCLES_MS, DEFAULT_ON_DURATIONS_MS};
use crate::agent::AgentConfig;
use crate::rewards::RewardSpec;
use crate::traffic::{ArrivalMode, TrafficSets};

/// How many UEs a cell serves in an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeCountModel {
    /// Poisson with mean `ues_per_cell`, at least one UE.
    Poisson,
    /// Exactly `ues_per_cell` rounded.
    #[default]
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_cells: usize,
    pub ues_per_cell: f64,
    pub ue_count: UeCountModel,
    /// Lower end of the log-uniform per-cell capacity draw, bytes per TTI.
    pub capacity_min: u32,
    pub capacity_max: u32,
    pub traffic: TrafficSets,
    pub arrival_mode: ArrivalMode,
    pub reset_ms: u32,
    pub train_step_ms: u32,
    pub infer_step_ms: u32,
    pub infer_steps: u32,
    /// Extra TTIs simulated after each measured window so every packet
    /// resolves; must cover the largest delay requirement.
    pub drain_ms: u32,
    pub train_episodes: u64,
    pub infer_episodes: u64,
    /// Deployments whose reset observations form the Q-convergence probe set.
    pub q_probe_deployments: u64,
    pub cycles_ms: Vec<u32>,
    pub on_durations_ms: Vec<u32>,
    /// Action-space bound; defaults to the smallest delay requirement.
    pub min_deadline_ms: Option<u32>,
    pub reward: RewardSpec,
    pub agent: AgentConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_cells: 21,
            ues_per_cell: 10.0,
            ue_count: UeCountModel::default(),
            capacity_min: 220,
            capacity_max: 1500,
            traffic: TrafficSets::default(),
            arrival_mode: ArrivalMode::Poisson,
            reset_ms: 500,
            train_step_ms: 1500,
            infer_step_ms: 1000,
            infer_steps: 10,
            drain_ms: 100,
            train_episodes: 500,
            infer_episodes: 10,
            q_probe_deployments: 5,
            cycles_ms: DEFAULT_CYCLES_MS.to_vec(),
            on_durations_ms: DEFAULT_ON_DURATIONS_MS.to_vec(),
            min_deadline_ms: None,
            reward: RewardSpec::default(),
            agent: AgentConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn min_deadline(&self) -> u32 {
        self.min_deadline_ms.unwrap_or_else(|| self.traffic.min_delay_req())
    }

    pub fn action_space(&self) -> Result<ActionSpace, HarnessError> {
        Ok(ActionSpace::enumerate(self.min_deadline(), &self.cycles_ms, &self.on_durations_ms)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        self.traffic.validate()?;
        self.reward.validate()?;
        if self.n_cells == 0 {
            return bad("n_cells must be positive");
        }
        if !(self.ues_per_cell >= 1.0) {
            return bad("ues_per_cell must be at least 1");
        }
        if self.capacity_min == 0 || self.capacity_min > self.capacity_max {
            return bad("capacity range must satisfy 0 < capacity_min <= capacity_max");
        }
        let durations = [
            self.reset_ms,
            self.train_step_ms,
            self.infer_step_ms,
            self.infer_steps,
            self.drain_ms,
        ];
        if durations.contains(&0) {
            return bad("durations and step counts must be positive");
        }
        if self.drain_ms < self.traffic.max_delay_req() {
            return bad("drain_ms must cover the largest delay requirement");
        }
        let agent = &self.agent;
        if agent.batch_size == 0 || agent.buffer_capacity < agent.threshold() || agent.threshold() == 0 {
            return bad("agent needs batch_size > 0 and buffer_capacity >= threshold_batches * batch_size");
        }
        if agent.hidden_layers.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(agent.learning_rate > 0.0) || !(agent.epsilon.decay > 0.0) {
            return bad("learning rate and epsilon decay must be positive");
        }
        self.action_space()?;
        Ok(())
    }
}
