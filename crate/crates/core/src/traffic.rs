//! Per-UE delay-constrained downlink traffic (FTP model 3 style).
//!
//! Each UE draws a fixed packet size, mean inter-arrival time and delay
//! requirement once; packets then arrive as a Poisson process quantized to
//! the 1 ms TTI grid.

use std::io::{BufRead, Write};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("{0} value set is empty")]
    EmptySet(&'static str),
    #[error("{0} values must be positive")]
    NonPositive(&'static str),
    #[error("at least one UE is required")]
    NoUes,
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Value sets UE profiles are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficSets {
    pub packet_sizes: Vec<u32>,
    pub mean_interarrivals: Vec<u32>,
    pub delay_reqs: Vec<u32>,
}

impl Default for TrafficSets {
    fn default() -> Self {
        Self {
            packet_sizes: (125..=500).step_by(25).collect(),
            mean_interarrivals: vec![10, 15, 20],
            delay_reqs: vec![50, 75, 100],
        }
    }
}

impl TrafficSets {
    pub fn validate(&self) -> Result<(), TrafficError> {
        for (name, set) in [
            ("packet size", &self.packet_sizes),
            ("mean inter-arrival", &self.mean_interarrivals),
            ("delay requirement", &self.delay_reqs),
        ] {
            if set.is_empty() {
                return Err(TrafficError::EmptySet(name));
            }
            if set.contains(&0) {
                return Err(TrafficError::NonPositive(name));
            }
        }
        Ok(())
    }

    pub fn min_delay_req(&self) -> u32 {
        self.delay_reqs.iter().copied().min().unwrap_or(0)
    }

    pub fn max_delay_req(&self) -> u32 {
        self.delay_reqs.iter().copied().max().unwrap_or(0)
    }
}

/// Traffic parameters of a single UE, fixed for an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeProfile {
    /// Bytes per packet.
    pub packet_size: u32,
    /// Mean inter-arrival time in ms.
    pub mean_interarrival: u32,
    /// Delay budget in ms.
    pub delay_req: u32,
}

impl UeProfile {
    /// Offered load in bytes per ms.
    pub fn offered_load(&self) -> f64 {
        f64::from(self.packet_size) / f64::from(self.mean_interarrival)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketStatus {
    Pending,
    /// Last byte sent in TTI `at`.
    Delivered { at: u32 },
    /// Removed from the queue in TTI `at` on deadline expiry.
    Dropped { at: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub ue: u32,
    /// Arrival TTI.
    pub arrival: u32,
    pub size: u32,
    /// Absolute deadline; the packet may be served in TTIs `arrival..deadline`.
    pub deadline: u32,
    pub remaining: u32,
    pub status: PacketStatus,
}

impl Packet {
    pub fn new(id: u64, ue: u32, arrival: u32, size: u32, delay_req: u32) -> Self {
        Self {
            id,
            ue,
            arrival,
            size,
            deadline: arrival + delay_req,
            remaining: size,
            status: PacketStatus::Pending,
        }
    }

    pub fn delay_req(&self) -> u32 {
        self.deadline - self.arrival
    }

    pub fn is_delivered(&self) -> bool {
        matches!(self.status, PacketStatus::Delivered { .. })
    }
}

/// How inter-arrival gaps are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    /// Exponential gaps (Poisson process).
    #[default]
    Poisson,
    /// Gaps fixed at the mean, first packet at t = 0. Only meant for tests
    /// and brute-force oracles.
    Deterministic,
}

pub fn sample_ue_profiles<R: Rng + ?Sized>(
    rng: &mut R,
    n_ues: usize,
    sets: &TrafficSets,
) -> Result<Vec<UeProfile>, TrafficError> {
    if n_ues == 0 {
        return Err(TrafficError::NoUes);
    }
    sets.validate()?;
    Ok((0..n_ues)
        .map(|_| UeProfile {
            packet_size: *sets.packet_sizes.choose(rng).unwrap(),
            mean_interarrival: *sets.mean_interarrivals.choose(rng).unwrap(),
            delay_req: *sets.delay_reqs.choose(rng).unwrap(),
        })
        .collect())
}

/// Arrival times (ms, floored) of one UE over `[0, window_ms)`.
pub fn arrival_times<R: Rng + ?Sized>(
    profile: &UeProfile,
    window_ms: u32,
    mode: ArrivalMode,
    rng: &mut R,
) -> Vec<u32> {
    let mean = f64::from(profile.mean_interarrival);
    let end = f64::from(window_ms);
    let mut times = Vec::new();
    match mode {
        ArrivalMode::Deterministic => {
            let mut k = 0u32;
            while f64::from(k + 1) * mean <= end {
                times.push((f64::from(k) * mean) as u32);
                k += 1;
            }
        }
        ArrivalMode::Poisson => {
            let exp = Exp::new(1.0 / mean).expect("mean inter-arrival is positive");
            let mut t = exp.sample(rng);
            while t < end {
                times.push(t.floor() as u32);
                t += exp.sample(rng);
            }
        }
    }
    times
}

/// Packets of one UE; ids are left at zero until the cell trace is merged.
pub fn generate_arrivals<R: Rng + ?Sized>(
    profile: &UeProfile,
    ue: u32,
    window_ms: u32,
    mode: ArrivalMode,
    rng: &mut R,
) -> Vec<Packet> {
    arrival_times(profile, window_ms, mode, rng)
        .into_iter()
        .map(|t| Packet::new(0, ue, t, profile.packet_size, profile.delay_req))
        .collect()
}

/// Merged cell-level trace over `[0, window_ms)`, sorted by arrival then UE,
/// with sequential packet ids.
pub fn generate_cell_trace<R: Rng + ?Sized>(
    profiles: &[UeProfile],
    window_ms: u32,
    mode: ArrivalMode,
    rng: &mut R,
) -> Vec<Packet> {
    let mut all: Vec<Packet> = profiles
        .iter()
        .enumerate()
        .flat_map(|(ue, p)| generate_arrivals(p, ue as u32, window_ms, mode, rng))
        .collect();
    // stable: per-UE order is preserved within a TTI
    all.sort_by_key(|p| (p.arrival, p.ue));
    for (i, p) in all.iter_mut().enumerate() {
        p.id = i as u64;
    }
    all
}

/// Writes a trace as `id ue arrival size deadline` lines.
pub fn write_trace<W: Write>(mut out: W, packets: &[Packet]) -> Result<(), TrafficError> {
    writeln!(out, "# id ue arrival size deadline")?;
    for p in packets {
        writeln!(out, "{} {} {} {} {}", p.id, p.ue, p.arrival, p.size, p.deadline)?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<Packet>, TrafficError> {
    let mut packets = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(TrafficError::Parse {
                line: i + 1,
                reason: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let num = |k: usize| -> Result<u64, TrafficError> {
            fields[k].parse().map_err(|e| TrafficError::Parse {
                line: i + 1,
                reason: format!("field {}: {e}", k + 1),
            })
        };
        let (arrival, deadline) = (num(2)? as u32, num(4)? as u32);
        if deadline <= arrival {
            return Err(TrafficError::Parse {
                line: i + 1,
                reason: "deadline must follow arrival".into(),
            });
        }
        packets.push(Packet::new(num(0)?, num(1)? as u32, arrival, num(3)? as u32, deadline - arrival));
    }
    Ok(packets)
}
