//! TTI-granular single-cell downlink simulator.
//!
//! Each TTI the cell enqueues new arrivals, drops expired packets and, when
//! the DTX pattern allows it, serves the queue FIFO up to its byte capacity.
//! Non-active periods are charged as whole gaps using the cheapest feasible
//! sleep mode.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actionspace::DtxConfig;
use crate::traffic::{Packet, PacketStatus, UeProfile};

/// Full-bandwidth downlink power, relative units.
pub const MAX_DL_POWER: f64 = 200.0;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("utilization {0} outside [0, 1]")]
    Utilization(f64),
    #[error("cell capacity must be positive")]
    ZeroCapacity,
    #[error("a cell needs at least one UE profile")]
    NoUes,
    #[error("simulation window must be positive")]
    EmptyWindow,
    #[error("drain {drain} ms shorter than largest delay requirement {delay} ms")]
    DrainTooShort { drain: u32, delay: u32 },
    #[error("packet {id} arrives at {arrival}, outside window [0, {window})")]
    OutOfWindow { id: u64, arrival: u32, window: u32 },
    #[error("arrivals are not sorted at packet {id}")]
    Unsorted { id: u64 },
    #[error("packet {id} is not a fresh arrival")]
    NotFresh { id: u64 },
}

/// Relative downlink power at bandwidth fraction `s_f`.
pub fn dl_power(s_f: f64) -> Result<f64, SimError> {
    if !(0.0..=1.0).contains(&s_f) {
        return Err(SimError::Utilization(s_f));
    }
    Ok(110.0 + 90.0 * s_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SleepMode {
    /// Micro sleep.
    Sm1,
    /// Light sleep.
    Sm2,
    /// Deep sleep.
    Sm3,
}

impl SleepMode {
    /// Deepest first.
    pub const ALL: [SleepMode; 3] = [SleepMode::Sm3, SleepMode::Sm2, SleepMode::Sm1];

    pub fn power(self) -> f64 {
        match self {
            SleepMode::Sm1 => 50.0,
            SleepMode::Sm2 => 25.0,
            SleepMode::Sm3 => 1.0,
        }
    }

    /// Total entering + leaving time, ms.
    pub fn transition_time(self) -> u32 {
        match self {
            SleepMode::Sm1 => 0,
            SleepMode::Sm2 => 6,
            SleepMode::Sm3 => 50,
        }
    }

    /// Relative power × ms spent on the transitions.
    pub fn transition_energy(self) -> f64 {
        match self {
            SleepMode::Sm1 => 0.0,
            SleepMode::Sm2 => 90.0,
            SleepMode::Sm3 => 1000.0,
        }
    }

    /// SM2 and SM3 need a gap strictly longer than their transition time.
    pub fn feasible_for(self, gap: u32) -> bool {
        self.transition_time() < gap
    }

    /// Energy of spending a whole `gap` in this mode.
    pub fn gap_energy(self, gap: u32) -> f64 {
        self.transition_energy() + f64::from(gap - self.transition_time()) * self.power()
    }
}

impl std::fmt::Display for SleepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SleepMode::Sm1 => "SM1",
            SleepMode::Sm2 => "SM2",
            SleepMode::Sm3 => "SM3",
        };
        f.write_str(s)
    }
}

/// Cheapest feasible sleep mode for a gap of `gap >= 1` TTIs. Ties go to the
/// deeper mode.
pub fn plan_sleep(gap: u32) -> (SleepMode, f64) {
    // deepest first, so an equal-energy shallower mode never displaces it
    SleepMode::ALL
        .into_iter()
        .filter(|m| m.feasible_for(gap))
        .map(|m| (m, m.gap_energy(gap)))
        .fold(None, |best: Option<(SleepMode, f64)>, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
        .expect("SM1 is feasible for any gap of at least one TTI")
}

/// Static description of one cell for an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScenario {
    /// Bytes per TTI at full bandwidth.
    pub capacity: u32,
    pub ue_profiles: Vec<UeProfile>,
    pub min_deadline: u32,
}

impl CellScenario {
    pub fn new(capacity: u32, ue_profiles: Vec<UeProfile>) -> Result<Self, SimError> {
        if capacity == 0 {
            return Err(SimError::ZeroCapacity);
        }
        let min_deadline = ue_profiles
            .iter()
            .map(|p| p.delay_req)
            .min()
            .ok_or(SimError::NoUes)?;
        Ok(Self {
            capacity,
            ue_profiles,
            min_deadline,
        })
    }

    pub fn max_delay_req(&self) -> u32 {
        self.ue_profiles.iter().map(|p| p.delay_req).max().unwrap_or(0)
    }

    /// Mean offered load in bytes per ms.
    pub fn offered_load(&self) -> f64 {
        self.ue_profiles.iter().map(UeProfile::offered_load).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub start: u32,
    pub len: u32,
    pub mode: SleepMode,
    pub energy: f64,
}

/// Energy accounting over a simulation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLedger {
    /// Power drawn in each TTI; gap TTIs carry their gap's mean power.
    pub tti_power: Vec<f64>,
    pub gaps: Vec<GapRecord>,
    /// Energy of all active TTIs.
    pub active_energy: f64,
}

impl PowerLedger {
    pub fn gap_energy(&self) -> f64 {
        self.gaps.iter().map(|g| g.energy).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.active_energy + self.gap_energy()
    }

    pub fn window_len(&self) -> u32 {
        self.tti_power.len() as u32
    }

    pub fn average_power(&self) -> f64 {
        self.total_energy() / f64::from(self.window_len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub capacity: u32,
    pub config: DtxConfig,
    pub window_len: u32,
    pub drain: u32,
    /// Every packet of the window with its final status.
    pub packets: Vec<Packet>,
    pub ledger: PowerLedger,
    /// Bytes sent in each TTI of the window.
    pub bytes_sent: Vec<u32>,
}

impl SimResult {
    /// Bandwidth fraction used in TTI `t` of the window.
    pub fn utilization(&self, t: usize) -> f64 {
        f64::from(self.bytes_sent[t]) / f64::from(self.capacity)
    }

    pub fn utilization_samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.bytes_sent.len()).map(|t| self.utilization(t))
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.packets
            .iter()
            .filter(|p| p.is_delivered())
            .map(|p| u64::from(p.size))
            .sum()
    }

    /// Writes per-packet outcomes, optionally followed by per-TTI rows.
    pub fn write_text<W: std::io::Write>(&self, mut out: W, per_tti: bool) -> std::io::Result<()> {
        writeln!(
            out,
            "# capacity={} cycle={} on={} offset={} window={} drain={} energy={}",
            self.capacity,
            self.config.cycle_length(),
            self.config.on_duration(),
            self.config.start_offset(),
            self.window_len,
            self.drain,
            self.ledger.total_energy()
        )?;
        writeln!(out, "# packet id ue arrival size deadline outcome at")?;
        for p in &self.packets {
            let (outcome, at) = match p.status {
                PacketStatus::Pending => ("pending".to_string(), String::from("-")),
                PacketStatus::Delivered { at } => ("delivered".to_string(), at.to_string()),
                PacketStatus::Dropped { at } => ("dropped".to_string(), at.to_string()),
            };
            writeln!(
                out,
                "packet {} {} {} {} {} {} {}",
                p.id, p.ue, p.arrival, p.size, p.deadline, outcome, at
            )?;
        }
        if per_tti {
            writeln!(out, "# tti t bytes_sent utilization power")?;
            for t in 0..self.bytes_sent.len() {
                writeln!(
                    out,
                    "tti {} {} {} {}",
                    t,
                    self.bytes_sent[t],
                    self.utilization(t),
                    self.ledger.tti_power[t]
                )?;
            }
        }
        Ok(())
    }
}

fn check_arrivals(arrivals: &[Packet], window_len: u32, drain: u32) -> Result<(), SimError> {
    let mut prev = 0;
    for p in arrivals {
        if p.arrival >= window_len {
            return Err(SimError::OutOfWindow {
                id: p.id,
                arrival: p.arrival,
                window: window_len,
            });
        }
        if p.arrival < prev {
            return Err(SimError::Unsorted { id: p.id });
        }
        if p.status != PacketStatus::Pending || p.remaining != p.size || p.deadline <= p.arrival {
            return Err(SimError::NotFresh { id: p.id });
        }
        if p.delay_req() > drain {
            return Err(SimError::DrainTooShort {
                drain,
                delay: p.delay_req(),
            });
        }
        prev = p.arrival;
    }
    Ok(())
}

/// Simulates `[0, window_len + drain)` and accounts power over
/// `[0, window_len)`.
pub fn run(
    scenario: &CellScenario,
    config: &DtxConfig,
    window_len: u32,
    drain: u32,
    arrivals: &[Packet],
) -> Result<SimResult, SimError> {
    if window_len == 0 {
        return Err(SimError::EmptyWindow);
    }
    if scenario.capacity == 0 {
        return Err(SimError::ZeroCapacity);
    }
    let max_delay = scenario.max_delay_req();
    if drain < max_delay {
        return Err(SimError::DrainTooShort {
            drain,
            delay: max_delay,
        });
    }
    check_arrivals(arrivals, window_len, drain)?;

    let capacity = scenario.capacity;
    let mut packets = arrivals.to_vec();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    let n = window_len as usize;
    let mut bytes_sent = vec![0u32; n];
    let mut tti_power = vec![0.0; n];
    let mut active_energy = 0.0;

    for t in 0..window_len + drain {
        while next < packets.len() && packets[next].arrival == t {
            queue.push_back(next);
            next += 1;
        }
        queue.retain(|&i| {
            let p = &mut packets[i];
            if p.deadline <= t {
                p.status = PacketStatus::Dropped { at: t };
                false
            } else {
                true
            }
        });

        if !config.active_in_tti(u64::from(t)) {
            continue;
        }
        let mut budget = capacity;
        while budget > 0 {
            let Some(&i) = queue.front() else { break };
            let p = &mut packets[i];
            let chunk = p.remaining.min(budget);
            p.remaining -= chunk;
            budget -= chunk;
            if p.remaining == 0 {
                p.status = PacketStatus::Delivered { at: t };
                queue.pop_front();
            }
        }
        if t < window_len {
            let sent = capacity - budget;
            let power = if sent > 0 {
                110.0 + 90.0 * f64::from(sent) / f64::from(capacity)
            } else {
                SleepMode::Sm1.power()
            };
            bytes_sent[t as usize] = sent;
            tti_power[t as usize] = power;
            active_energy += power;
        }
    }

    let gaps: Vec<GapRecord> = config
        .non_active_gaps(0, u64::from(window_len))
        .into_iter()
        .map(|(start, len)| {
            let (mode, energy) = plan_sleep(len as u32);
            GapRecord {
                start: start as u32,
                len: len as u32,
                mode,
                energy,
            }
        })
        .collect();
    for g in &gaps {
        let per_tti = g.energy / f64::from(g.len);
        for p in &mut tti_power[g.start as usize..(g.start + g.len) as usize] {
            *p = per_tti;
        }
    }

    Ok(SimResult {
        capacity,
        config: *config,
        window_len,
        drain,
        packets,
        ledger: PowerLedger {
            tti_power,
            gaps,
            active_energy,
        },
        bytes_sent,
    })
}
