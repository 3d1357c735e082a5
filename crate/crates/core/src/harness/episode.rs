//! Deployments and the training, inference and baseline episode loops.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, UeCountModel};
use super::seeds::{stream_rng, Purpose, Stream};
use super::HarnessError;
use crate::actionspace::{ActionSpace, DtxAction, DtxConfig};
use crate::agent::{greedy_action, ConvergencePoint, Experience, Trainer};
use crate::cellsim::{self, CellScenario, SimResult};
use crate::metrics::{extract_observation, period_metrics, Observation, PeriodMetrics, OBSERVATION_DIM};
use crate::neural::Mlp;
use crate::rewards::RewardSpec;
use crate::traffic::{generate_cell_trace, sample_ue_profiles, Packet};

/// Draws one cell: log-uniform capacity, UE count, UE profiles.
pub fn sample_cell<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig) -> Result<CellScenario, HarnessError> {
    let (lo, hi) = (f64::from(cfg.capacity_min).ln(), f64::from(cfg.capacity_max).ln());
    let capacity = if hi > lo { rng.random_range(lo..hi).exp() } else { lo.exp() };
    let capacity = (capacity.round() as u32).clamp(cfg.capacity_min, cfg.capacity_max);
    let n_ues = match cfg.ue_count {
        UeCountModel::Fixed => cfg.ues_per_cell.round() as usize,
        UeCountModel::Poisson => {
            let d = Poisson::new(cfg.ues_per_cell).map_err(|e| HarnessError::Config(e.to_string()))?;
            d.sample(rng) as usize
        }
    }
    .max(1);
    let profiles = sample_ue_profiles(rng, n_ues, &cfg.traffic)?;
    Ok(CellScenario::new(capacity, profiles)?)
}

/// The `n_cells` cells of deployment `index` for a purpose.
pub fn deployment(cfg: &ScenarioConfig, purpose: Purpose, index: u64) -> Result<Vec<CellScenario>, HarnessError> {
    (0..cfg.n_cells as u64)
        .map(|cell| sample_cell(&mut stream_rng(cfg.seed, purpose, Stream::Deployment, &[index, cell]), cfg))
        .collect()
}

/// Arrival trace for one measured window of one cell. Window 0 is the reset
/// window; the keys do not involve any action, so every policy evaluated on
/// the same key sees the same packets.
pub fn window_trace(
    cfg: &ScenarioConfig,
    scenario: &CellScenario,
    purpose: Purpose,
    key: [u64; 3],
    window_len: u32,
) -> Vec<Packet> {
    let mut rng = stream_rng(cfg.seed, purpose, Stream::Traffic, &key);
    generate_cell_trace(&scenario.ue_profiles, window_len, cfg.arrival_mode, &mut rng)
}

pub fn simulate(
    cfg: &ScenarioConfig,
    scenario: &CellScenario,
    dtx: &DtxConfig,
    window_len: u32,
    trace: &[Packet],
) -> Result<(SimResult, PeriodMetrics), HarnessError> {
    let result = cellsim::run(scenario, dtx, window_len, cfg.drain_ms, trace)?;
    let metrics = period_metrics(&result)?;
    Ok((result, metrics))
}

/// Observation from the always-active reset window of a cell.
pub fn reset_observation(
    cfg: &ScenarioConfig,
    scenario: &CellScenario,
    purpose: Purpose,
    episode: u64,
    cell: u64,
) -> Result<Observation, HarnessError> {
    let trace = window_trace(cfg, scenario, purpose, [episode, cell, 0], cfg.reset_ms);
    let (result, _) = simulate(cfg, scenario, &DtxConfig::ALWAYS_ACTIVE, cfg.reset_ms, &trace)?;
    Ok(extract_observation(&result))
}

/// Reset observations of the Q-probe deployments.
pub fn q_probe_states(cfg: &ScenarioConfig) -> Result<Vec<Observation>, HarnessError> {
    let mut states = Vec::new();
    for d in 0..cfg.q_probe_deployments {
        for (c, scenario) in deployment(cfg, Purpose::QProbe, d)?.iter().enumerate() {
            states.push(reset_observation(cfg, scenario, Purpose::QProbe, d, c as u64)?);
        }
    }
    Ok(states)
}

/// One training episode: fresh deployment, one decision per cell, all
/// experiences appended, then one training step per experience once the
/// buffer has reached its threshold. Returns the episode's experiences.
pub fn run_training_episode(
    trainer: &mut Trainer,
    cfg: &ScenarioConfig,
    space: &ActionSpace,
    episode: u64,
) -> Result<Vec<Experience>, HarnessError> {
    let cells = deployment(cfg, Purpose::Train, episode)?;
    let eps = if trainer.normalizers().is_some() {
        cfg.agent.epsilon.value(episode)
    } else {
        1.0
    };
    let mut policy_rng = stream_rng(cfg.seed, Purpose::Train, Stream::Policy, &[episode]);
    let mut experiences = Vec::with_capacity(cells.len());
    for (c, scenario) in cells.iter().enumerate() {
        let state = reset_observation(cfg, scenario, Purpose::Train, episode, c as u64)?;
        let action = trainer.select_action(&state, eps, &mut policy_rng)?;
        let dtx = space.get(action)?.with_offset(0)?;
        let trace = window_trace(cfg, scenario, Purpose::Train, [episode, c as u64, 1], cfg.train_step_ms);
        let (_, m) = simulate(cfg, scenario, &dtx, cfg.train_step_ms, &trace)?;
        experiences.push(Experience {
            state,
            action,
            reward: cfg.reward.evaluate(m.x, m.y),
        });
    }
    for e in &experiences {
        trainer.push(e.clone());
    }
    if trainer.is_ready() {
        trainer.fit_normalizers_once()?;
        let mut batch_rng = stream_rng(cfg.seed, Purpose::Train, Stream::Batches, &[episode]);
        for _ in 0..experiences.len() {
            trainer.train_step(&mut batch_rng)?;
        }
    }
    Ok(experiences)
}

/// A trained policy with everything needed to act on raw observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub net: Mlp,
    pub normalizers: [f64; OBSERVATION_DIM],
    pub action_space: ActionSpace,
    pub reward: RewardSpec,
    pub seed: u64,
}

impl Model {
    pub fn act(&self, state: &Observation) -> Result<usize, HarnessError> {
        Ok(greedy_action(&self.net, &self.normalizers, state)?)
    }

    pub fn q_values(&self, state: &Observation) -> Result<Vec<f64>, HarnessError> {
        Ok(self.net.forward_normalized(&state.to_array(), &self.normalizers)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub model: Model,
    pub convergence: Vec<ConvergencePoint>,
    pub experiences: u64,
    pub train_steps: u64,
}

/// Full training: network initialization, Q-probe set, `train_episodes`
/// episodes. `progress` is called after every episode.
pub fn train(cfg: &ScenarioConfig, mut progress: impl FnMut(u64, &Trainer)) -> Result<TrainingRun, HarnessError> {
    cfg.validate()?;
    let space = cfg.action_space()?;
    let mut init_rng = stream_rng(cfg.seed, Purpose::Init, Stream::Deployment, &[]);
    let mut trainer = Trainer::new(cfg.agent.clone(), space.len(), &mut init_rng)?;
    trainer.set_probe_states(q_probe_states(cfg)?);
    let mut experiences = 0;
    for episode in 0..cfg.train_episodes {
        experiences += run_training_episode(&mut trainer, cfg, &space, episode)?.len() as u64;
        progress(episode, &trainer);
    }
    let normalizers = *trainer.normalizers().ok_or(HarnessError::NeverTrained {
        have: trainer.buffer().len(),
        need: cfg.agent.threshold(),
    })?;
    Ok(TrainingRun {
        convergence: trainer.convergence().to_vec(),
        train_steps: trainer.steps(),
        experiences,
        model: Model {
            net: trainer.net().clone(),
            normalizers,
            action_space: space,
            reward: cfg.reward,
            seed: cfg.seed,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    Agent,
    Baseline,
}

/// One cell in one inference step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub mode: RecordMode,
    pub seed: u64,
    pub episode: u64,
    pub cell: u64,
    pub step: u32,
    pub capacity: u32,
    pub n_ues: u32,
    pub offered_load: f64,
    pub traffic_intensity: f64,
    pub interarrival_mean: f64,
    pub interarrival_var: f64,
    pub pktsize_mean: f64,
    pub pktsize_var: f64,
    pub delay_min: f64,
    pub delay_wavg: f64,
    pub tx_capability: f64,
    pub action: usize,
    pub cycle_length: u32,
    pub on_duration: u32,
    pub start_offset: u32,
    pub x: f64,
    pub y: f64,
    pub reward: f64,
    pub prb_util: f64,
}

impl EpisodeRecord {
    pub fn observation(&self) -> Observation {
        Observation {
            traffic_intensity: self.traffic_intensity,
            interarrival_mean: self.interarrival_mean,
            interarrival_var: self.interarrival_var,
            pktsize_mean: self.pktsize_mean,
            pktsize_var: self.pktsize_var,
            delay_min: self.delay_min,
            delay_wavg: self.delay_wavg,
            tx_capability: self.tx_capability,
        }
    }

    /// Identifies the matching record of another run on the same seed.
    pub fn key(&self) -> (u64, u64, u64, u32) {
        (self.seed, self.episode, self.cell, self.step)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Agent(&'a Model),
    /// Always active, i.e. cell DTX disabled.
    Baseline,
}

impl Policy<'_> {
    fn mode(&self) -> RecordMode {
        match self {
            Policy::Agent(_) => RecordMode::Agent,
            Policy::Baseline => RecordMode::Baseline,
        }
    }

    fn choose(&self, space: &ActionSpace, state: &Observation) -> Result<usize, HarnessError> {
        match self {
            Policy::Agent(m) => m.act(state),
            Policy::Baseline => Ok(space.always_active_index()),
        }
    }
}

/// One inference episode: reset, then `infer_steps` greedy decisions per
/// cell, each observed from the previous window.
pub fn run_inference_episode(
    cfg: &ScenarioConfig,
    space: &ActionSpace,
    policy: Policy<'_>,
    reward: &RewardSpec,
    episode: u64,
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let cells = deployment(cfg, Purpose::Infer, episode)?;
    let mut records = Vec::with_capacity(cells.len() * cfg.infer_steps as usize);
    for (c, scenario) in cells.iter().enumerate() {
        let cell = c as u64;
        let mut offset_rng = stream_rng(cfg.seed, Purpose::Infer, Stream::Offset, &[episode, cell]);
        let mut state = reset_observation(cfg, scenario, Purpose::Infer, episode, cell)?;
        for step in 1..=cfg.infer_steps {
            let index = policy.choose(space, &state)?;
            let action: DtxAction = space.get(index)?;
            let offset = offset_rng.random_range(0..action.cycle_length);
            let dtx = action.with_offset(offset)?;
            let trace = window_trace(cfg, scenario, Purpose::Infer, [episode, cell, u64::from(step)], cfg.infer_step_ms);
            let (result, m) = simulate(cfg, scenario, &dtx, cfg.infer_step_ms, &trace)?;
            let o = state;
            records.push(EpisodeRecord {
                mode: policy.mode(),
                seed: cfg.seed,
                episode,
                cell,
                step,
                capacity: scenario.capacity,
                n_ues: scenario.ue_profiles.len() as u32,
                offered_load: scenario.offered_load(),
                traffic_intensity: o.traffic_intensity,
                interarrival_mean: o.interarrival_mean,
                interarrival_var: o.interarrival_var,
                pktsize_mean: o.pktsize_mean,
                pktsize_var: o.pktsize_var,
                delay_min: o.delay_min,
                delay_wavg: o.delay_wavg,
                tx_capability: o.tx_capability,
                action: index,
                cycle_length: action.cycle_length,
                on_duration: action.on_duration,
                start_offset: offset,
                x: m.x,
                y: m.y,
                reward: reward.evaluate(m.x, m.y),
                prb_util: m.prb_util,
            });
            state = extract_observation(&result);
        }
    }
    Ok(records)
}

/// All inference episodes under a trained model.
pub fn run_inference(cfg: &ScenarioConfig, model: &Model) -> Result<Vec<EpisodeRecord>, HarnessError> {
    run_episodes(cfg, &model.action_space, Policy::Agent(model), &model.reward)
}

/// The same episodes as [`run_inference`] with cell DTX disabled.
pub fn run_baseline(cfg: &ScenarioConfig) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let space = cfg.action_space()?;
    run_episodes(cfg, &space, Policy::Baseline, &cfg.reward)
}

fn run_episodes(
    cfg: &ScenarioConfig,
    space: &ActionSpace,
    policy: Policy<'_>,
    reward: &RewardSpec,
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    cfg.validate()?;
    let mut all = Vec::new();
    for episode in 0..cfg.infer_episodes {
        all.extend(run_inference_episode(cfg, space, policy, reward, episode)?);
    }
    Ok(all)
}
