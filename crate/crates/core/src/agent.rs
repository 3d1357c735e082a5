//! Contextual-bandit DQN trainer.
//!
//! Every experience is a one-step episode, so the regression target of a
//! sampled entry is its stored reward: there is no bootstrap term, no
//! discount and no target network.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Observation, OBSERVATION_DIM};
use crate::neural::{AdamState, Mlp, NeuralError, TrainSample};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("replay buffer holds {have} experiences, {need} required")]
    BelowThreshold { have: usize, need: usize },
    #[error("input normalizers have not been fitted")]
    NoNormalizers,
    #[error("empty probe set")]
    NoProbeStates,
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: Observation,
    pub action: usize,
    pub reward: f64,
}

/// Bounded FIFO of the most recent experiences.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, exp: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(exp);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Experience> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }
}

/// `eps(t) = end + (start - end)·exp(-t/decay)`, `t` counted in episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 0.9,
            end: 0.05,
            decay: 50.0,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, episode: u64) -> f64 {
        self.end + (self.start - self.end) * (-(episode as f64) / self.decay).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub hidden_layers: Vec<usize>,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Training starts once the buffer holds this many batches.
    pub threshold_batches: usize,
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    /// Training steps between convergence-log entries.
    pub probe_interval: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![128, 128],
            batch_size: 128,
            buffer_capacity: 10_000,
            threshold_batches: 10,
            learning_rate: 1e-3,
            epsilon: EpsilonSchedule::default(),
            probe_interval: 100,
        }
    }
}

impl AgentConfig {
    pub fn threshold(&self) -> usize {
        self.threshold_batches * self.batch_size
    }

    pub fn layer_sizes(&self, n_actions: usize) -> Vec<usize> {
        let mut sizes = vec![OBSERVATION_DIM];
        sizes.extend(&self.hidden_layers);
        sizes.push(n_actions);
        sizes
    }
}

fn scaled(state: &Observation, normalizers: &[f64; OBSERVATION_DIM]) -> [f64; OBSERVATION_DIM] {
    let mut s = state.to_array();
    s.iter_mut().zip(normalizers).for_each(|(v, n)| *v /= n);
    s
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn greedy_action(
    net: &Mlp,
    normalizers: &[f64; OBSERVATION_DIM],
    state: &Observation,
) -> Result<usize, AgentError> {
    let q = net.forward_normalized(&state.to_array(), normalizers)?;
    Ok(argmax(&q))
}

/// Epsilon-greedy choice. Without normalizers the network input is
/// undefined, so the choice is uniform regardless of `eps`.
pub fn select_action<R: Rng + ?Sized>(
    net: &Mlp,
    normalizers: Option<&[f64; OBSERVATION_DIM]>,
    state: &Observation,
    eps: f64,
    rng: &mut R,
) -> Result<usize, AgentError> {
    let explore = rng.random::<f64>() < eps;
    match normalizers {
        Some(n) if !explore => greedy_action(net, n, state),
        _ => Ok(rng.random_range(0..net.output_dim())),
    }
}

/// Per-feature maximum over the buffer; zero maxima become 1.
pub fn fit_normalizers(buffer: &ReplayBuffer, threshold: usize) -> Result<[f64; OBSERVATION_DIM], AgentError> {
    if buffer.len() < threshold || buffer.is_empty() {
        return Err(AgentError::BelowThreshold {
            have: buffer.len(),
            need: threshold.max(1),
        });
    }
    let mut max = [0.0f64; OBSERVATION_DIM];
    for e in buffer.iter() {
        for (m, v) in max.iter_mut().zip(e.state.to_array()) {
            *m = m.max(v);
        }
    }
    for m in &mut max {
        if *m <= 0.0 {
            *m = 1.0;
        }
    }
    Ok(max)
}

/// Mean over probe states of the largest predicted reward.
pub fn probe_q(
    net: &Mlp,
    normalizers: &[f64; OBSERVATION_DIM],
    probe_states: &[Observation],
) -> Result<f64, AgentError> {
    if probe_states.is_empty() {
        return Err(AgentError::NoProbeStates);
    }
    let mut total = 0.0;
    for s in probe_states {
        let q = net.forward_normalized(&s.to_array(), normalizers)?;
        total += q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(total / probe_states.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub step: u64,
    pub mean_max_q: f64,
    /// Mean loss over the steps since the previous point.
    pub loss_avg: f64,
}

/// A regression target as drawn from the buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEntry {
    pub buffer_index: usize,
    pub action: usize,
    pub target: f64,
}

/// Owns the Q-network, its optimizer and the replay buffer.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: AgentConfig,
    net: Mlp,
    adam: AdamState,
    buffer: ReplayBuffer,
    normalizers: Option<[f64; OBSERVATION_DIM]>,
    steps: u64,
    probe_states: Vec<Observation>,
    convergence: Vec<ConvergencePoint>,
    losses_since_probe: Vec<f64>,
}

impl Trainer {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, n_actions: usize, rng: &mut R) -> Result<Self, AgentError> {
        let net = Mlp::init(rng, &config.layer_sizes(n_actions))?;
        let adam = AdamState::new(&net, config.learning_rate);
        Ok(Self {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            net,
            adam,
            normalizers: None,
            steps: 0,
            probe_states: Vec::new(),
            convergence: Vec::new(),
            losses_since_probe: Vec::new(),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn normalizers(&self) -> Option<&[f64; OBSERVATION_DIM]> {
        self.normalizers.as_ref()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn convergence(&self) -> &[ConvergencePoint] {
        &self.convergence
    }

    pub fn push(&mut self, exp: Experience) {
        self.buffer.push(exp);
    }

    pub fn is_ready(&self) -> bool {
        self.buffer.len() >= self.config.threshold()
    }

    /// Fits the normalizers the first time the buffer crosses the threshold;
    /// later calls are no-ops. Returns whether a fit happened.
    pub fn fit_normalizers_once(&mut self) -> Result<bool, AgentError> {
        if self.normalizers.is_some() {
            return Ok(false);
        }
        self.normalizers = Some(fit_normalizers(&self.buffer, self.config.threshold())?);
        Ok(true)
    }

    pub fn set_probe_states(&mut self, states: Vec<Observation>) {
        self.probe_states = states;
    }

    pub fn probe_states(&self) -> &[Observation] {
        &self.probe_states
    }

    pub fn select_action<R: Rng + ?Sized>(&self, state: &Observation, eps: f64, rng: &mut R) -> Result<usize, AgentError> {
        select_action(&self.net, self.normalizers.as_ref(), state, eps, rng)
    }

    /// Uniformly drawn batch without replacement; targets are the stored
    /// rewards.
    pub fn sample_batch<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<BatchEntry> {
        let n = self.config.batch_size.min(self.buffer.len());
        rand::seq::index::sample(rng, self.buffer.len(), n)
            .into_iter()
            .map(|i| {
                let e = &self.buffer.items[i];
                BatchEntry {
                    buffer_index: i,
                    action: e.action,
                    target: e.reward,
                }
            })
            .collect()
    }

    /// One optimization step on a random batch. Returns the batch loss
    /// before the update.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64, AgentError> {
        if !self.is_ready() {
            return Err(AgentError::BelowThreshold {
                have: self.buffer.len(),
                need: self.config.threshold(),
            });
        }
        let normalizers = self.normalizers.ok_or(AgentError::NoNormalizers)?;
        let batch = self.sample_batch(rng);
        let inputs: Vec<[f64; OBSERVATION_DIM]> = batch
            .iter()
            .map(|b| scaled(&self.buffer.items[b.buffer_index].state, &normalizers))
            .collect();
        let samples: Vec<TrainSample<'_>> = batch
            .iter()
            .zip(&inputs)
            .map(|(b, x)| TrainSample {
                input: x,
                action: b.action,
                target: b.target,
            })
            .collect();
        let (loss, grads) = self.net.backward(&samples)?;
        self.adam.step(&mut self.net, &grads)?;
        self.steps += 1;
        self.losses_since_probe.push(loss);

        if self.config.probe_interval > 0 && self.steps % self.config.probe_interval == 0 && !self.probe_states.is_empty() {
            let mean_max_q = probe_q(&self.net, &normalizers, &self.probe_states)?;
            let loss_avg = self.losses_since_probe.iter().sum::<f64>() / self.losses_since_probe.len() as f64;
            self.losses_since_probe.clear();
            self.convergence.push(ConvergencePoint {
                step: self.steps,
                mean_max_q,
                loss_avg,
            });
        }
        Ok(loss)
    }
}
