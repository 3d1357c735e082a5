//! Cell DTX patterns and the enumerated action set.
//!
//! A pattern is the RRC triple (cycle length, on-duration, start offset) at
//! 1 ms TTI granularity. Fractional on-durations and the slot offset are not
//! modelled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer cycle lengths (ms) from the RRC value table.
///
/// The table continues past 128 ms up to 10240 ms; only the listed values are
/// reproduced here. Longer cycles can be supplied through the scenario file.
pub const DEFAULT_CYCLES_MS: &[u32] = &[10, 20, 32, 40, 60, 64, 70, 80, 128];

/// Integer on-duration timer values (ms) from the RRC value table, truncated
/// at the first elided entry.
pub const DEFAULT_ON_DURATIONS_MS: &[u32] = &[1, 2, 3, 4, 5, 6, 8, 10, 20, 30, 40, 50, 60, 80, 100];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionSpaceError {
    #[error("minimum deadline must exceed 1 ms, got {0}")]
    DeadlineTooSmall(u32),
    #[error("{0} value set is empty")]
    EmptySet(&'static str),
    #[error("{0} value set contains a zero entry")]
    ZeroValue(&'static str),
    #[error("invalid DTX pattern: cycle {cycle}, on {on}, offset {offset}")]
    InvalidConfig { cycle: u32, on: u32, offset: u32 },
    #[error("action index {index} out of range for {len} actions")]
    IndexOutOfRange { index: usize, len: usize },
}

/// A cell's RRC-configured DTX pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DtxConfig {
    cycle_length: u32,
    on_duration: u32,
    start_offset: u32,
}

impl DtxConfig {
    /// The always-active pattern, i.e. cell DTX disabled.
    pub const ALWAYS_ACTIVE: DtxConfig = DtxConfig {
        cycle_length: 1,
        on_duration: 1,
        start_offset: 0,
    };

    pub fn new(cycle_length: u32, on_duration: u32, start_offset: u32) -> Result<Self, ActionSpaceError> {
        let always_active = cycle_length == 1 && on_duration == 1;
        let valid = on_duration >= 1
            && start_offset < cycle_length
            && (on_duration < cycle_length || always_active);
        if !valid {
            return Err(ActionSpaceError::InvalidConfig {
                cycle: cycle_length,
                on: on_duration,
                offset: start_offset,
            });
        }
        Ok(Self {
            cycle_length,
            on_duration,
            start_offset,
        })
    }

    pub fn cycle_length(&self) -> u32 {
        self.cycle_length
    }

    pub fn on_duration(&self) -> u32 {
        self.on_duration
    }

    pub fn start_offset(&self) -> u32 {
        self.start_offset
    }

    pub fn is_always_active(&self) -> bool {
        self.on_duration == self.cycle_length
    }

    /// Whether the cell may transmit in TTI `t`.
    pub fn active_in_tti(&self, t: u64) -> bool {
        let cycle = u64::from(self.cycle_length);
        let phase = (t + cycle - u64::from(self.start_offset) % cycle) % cycle;
        phase < u64::from(self.on_duration)
    }

    /// Maximal runs of inactive TTIs inside `[t0, t1)`, as `(start, length)`.
    ///
    /// Runs touching the window edges are truncated to the window.
    pub fn non_active_gaps(&self, t0: u64, t1: u64) -> Vec<(u64, u64)> {
        let mut gaps = Vec::new();
        if self.is_always_active() {
            return gaps;
        }
        let mut run_start: Option<u64> = None;
        for t in t0..t1 {
            match (self.active_in_tti(t), run_start) {
                (false, None) => run_start = Some(t),
                (true, Some(s)) => {
                    gaps.push((s, t - s));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            gaps.push((s, t1 - s));
        }
        gaps
    }
}

/// A `(cycle length, on-duration)` pair; the start offset is chosen at
/// deployment time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DtxAction {
    pub cycle_length: u32,
    pub on_duration: u32,
}

impl DtxAction {
    pub const ALWAYS_ACTIVE: DtxAction = DtxAction {
        cycle_length: 1,
        on_duration: 1,
    };

    pub fn with_offset(&self, start_offset: u32) -> Result<DtxConfig, ActionSpaceError> {
        DtxConfig::new(self.cycle_length, self.on_duration, start_offset)
    }
}

impl std::fmt::Display for DtxAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.cycle_length, self.on_duration)
    }
}

/// Ordered set of legal actions; the position of an action is the index of
/// its Q-network output node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    actions: Vec<DtxAction>,
}

impl ActionSpace {
    /// All `(c, o)` with `c < min_deadline` and `o < c`, sorted by cycle then
    /// on-duration, followed by the always-active pair `(1, 1)`.
    pub fn enumerate(min_deadline: u32, cycle_set: &[u32], on_set: &[u32]) -> Result<Self, ActionSpaceError> {
        if min_deadline <= 1 {
            return Err(ActionSpaceError::DeadlineTooSmall(min_deadline));
        }
        for (name, set) in [("cycle", cycle_set), ("on-duration", on_set)] {
            if set.is_empty() {
                return Err(ActionSpaceError::EmptySet(name));
            }
            if set.contains(&0) {
                return Err(ActionSpaceError::ZeroValue(name));
            }
        }
        let mut actions: Vec<DtxAction> = cycle_set
            .iter()
            .filter(|&&c| c < min_deadline)
            .flat_map(|&c| {
                on_set.iter().filter(move |&&o| o < c).map(move |&o| DtxAction {
                    cycle_length: c,
                    on_duration: o,
                })
            })
            .collect();
        actions.sort_unstable();
        actions.dedup();
        actions.push(DtxAction::ALWAYS_ACTIVE);
        Ok(Self { actions })
    }

    /// Rebuilds a space from a stored action list, checking each entry.
    pub fn from_actions(actions: Vec<DtxAction>) -> Result<Self, ActionSpaceError> {
        for a in &actions {
            DtxConfig::new(a.cycle_length, a.on_duration, 0)?;
        }
        Ok(Self { actions })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<DtxAction, ActionSpaceError> {
        self.actions.get(index).copied().ok_or(ActionSpaceError::IndexOutOfRange {
            index,
            len: self.actions.len(),
        })
    }

    pub fn index_of(&self, action: DtxAction) -> Option<usize> {
        self.actions.iter().position(|&a| a == action)
    }

    /// Index of the always-active action (the last one by construction).
    pub fn always_active_index(&self) -> usize {
        self.index_of(DtxAction::ALWAYS_ACTIVE)
            .expect("action space always contains (1,1)")
    }

    pub fn actions(&self) -> &[DtxAction] {
        &self.actions
    }
}
