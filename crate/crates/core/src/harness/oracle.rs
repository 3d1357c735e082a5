//! Brute-force oracle: every action simulated on the same traffic.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::episode::{deployment, reset_observation, simulate, window_trace};
use super::seeds::Purpose;
use super::HarnessError;
use crate::actionspace::ActionSpace;
use crate::cellsim::CellScenario;
use crate::metrics::Observation;
use crate::rewards::RewardSpec;
use crate::traffic::Packet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub action: usize,
    pub cycle_length: u32,
    pub on_duration: u32,
    pub mean_x: f64,
    pub mean_y: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable {
    pub rows: Vec<OracleRow>,
    /// Row with the largest mean reward, lowest index on ties.
    pub best: usize,
}

impl OracleTable {
    pub fn best_row(&self) -> &OracleRow {
        &self.rows[self.best]
    }

    /// How far `action` falls short of the best mean reward.
    pub fn regret(&self, action: usize) -> f64 {
        self.best_row().mean_reward - self.rows[action].mean_reward
    }
}

/// Simulates every action of `space` with start offset 0 on each trace and
/// averages x, y and reward across traces.
pub fn oracle_sweep(
    cfg: &ScenarioConfig,
    scenario: &CellScenario,
    traces: &[Vec<Packet>],
    window_len: u32,
    space: &ActionSpace,
    reward: &RewardSpec,
) -> Result<OracleTable, HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::Config("oracle sweep needs at least one trace".into()));
    }
    let n = traces.len() as f64;
    let mut rows = Vec::with_capacity(space.len());
    for (index, action) in space.actions().iter().enumerate() {
        let dtx = action.with_offset(0)?;
        let (mut sx, mut sy, mut sr) = (0.0, 0.0, 0.0);
        for trace in traces {
            let (_, m) = simulate(cfg, scenario, &dtx, window_len, trace)?;
            sx += m.x;
            sy += m.y;
            sr += reward.evaluate(m.x, m.y);
        }
        rows.push(OracleRow {
            action: index,
            cycle_length: action.cycle_length,
            on_duration: action.on_duration,
            mean_x: sx / n,
            mean_y: sy / n,
            mean_reward: sr / n,
        });
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean_reward > rows[best].mean_reward {
            best = i;
        }
    }
    Ok(OracleTable { rows, best })
}

/// A held-out oracle scenario: the cell, its reset observation and the
/// step-window traces the sweep runs on.
#[derive(Debug, Clone)]
pub struct ProbeScenario {
    pub id: u64,
    pub cell: CellScenario,
    pub observation: Observation,
    pub traces: Vec<Vec<Packet>>,
}

/// Scenario `id` drawn from the oracle streams, with `repetitions`
/// independent training-length step windows.
pub fn probe_scenario(cfg: &ScenarioConfig, id: u64, repetitions: u32) -> Result<ProbeScenario, HarnessError> {
    let single = ScenarioConfig {
        n_cells: 1,
        ..cfg.clone()
    };
    let cell = deployment(&single, Purpose::Oracle, id)?.remove(0);
    let observation = reset_observation(cfg, &cell, Purpose::Oracle, id, 0)?;
    let traces = (1..=u64::from(repetitions))
        .map(|r| window_trace(cfg, &cell, Purpose::Oracle, [id, 0, r], cfg.train_step_ms))
        .collect();
    Ok(ProbeScenario {
        id,
        cell,
        observation,
        traces,
    })
}

/// Probe scenario `id` and its oracle table under the configured reward.
pub fn sweep_scenario(
    cfg: &ScenarioConfig,
    id: u64,
    repetitions: u32,
) -> Result<(ProbeScenario, OracleTable), HarnessError> {
    let probe = probe_scenario(cfg, id, repetitions)?;
    let table = oracle_sweep(cfg, &probe.cell, &probe.traces, cfg.train_step_ms, &cfg.action_space()?, &cfg.reward)?;
    Ok((probe, table))
}
