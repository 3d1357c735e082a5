//! Per-window QoS and power metrics, and the observation vector fed to the
//! agent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellsim::{PowerLedger, SimResult, MAX_DL_POWER};
use crate::traffic::{Packet, PacketStatus};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("packet {id} is still pending; the drain window is too short")]
    Unresolved { id: u64 },
}

pub const OBSERVATION_DIM: usize = 8;

/// Column names in network-input order.
pub const FEATURE_NAMES: [&str; OBSERVATION_DIM] = [
    "traffic_intensity",
    "interarrival_mean",
    "interarrival_var",
    "pktsize_mean",
    "pktsize_var",
    "delay_min",
    "delay_wavg",
    "tx_capability",
];

/// RAN observation of one cell over one window. Field order is the network
/// input layout and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    /// Arrived bytes per ms.
    pub traffic_intensity: f64,
    pub interarrival_mean: f64,
    pub interarrival_var: f64,
    pub pktsize_mean: f64,
    pub pktsize_var: f64,
    pub delay_min: f64,
    /// Size-weighted mean delay requirement.
    pub delay_wavg: f64,
    /// Bytes per TTI at full bandwidth, as seen from transmitting TTIs.
    pub tx_capability: f64,
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBSERVATION_DIM] {
        [
            self.traffic_intensity,
            self.interarrival_mean,
            self.interarrival_var,
            self.pktsize_mean,
            self.pktsize_var,
            self.delay_min,
            self.delay_wavg,
            self.tx_capability,
        ]
    }

    pub fn from_array(a: [f64; OBSERVATION_DIM]) -> Self {
        Self {
            traffic_intensity: a[0],
            interarrival_mean: a[1],
            interarrival_var: a[2],
            pktsize_mean: a[3],
            pktsize_var: a[4],
            delay_min: a[5],
            delay_wavg: a[6],
            tx_capability: a[7],
        }
    }
}

/// Reward inputs of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    /// Normalized power.
    pub x: f64,
    /// Delivered data ratio.
    pub y: f64,
    /// Mean bandwidth fraction.
    pub prb_util: f64,
}

/// Share of arrived bytes carried by packets delivered before their deadline.
/// An empty window counts as fully delivered.
pub fn delivered_data_ratio(packets: &[Packet]) -> Result<f64, MetricsError> {
    let (mut ok, mut failed) = (0u64, 0u64);
    for p in packets {
        match p.status {
            PacketStatus::Pending => return Err(MetricsError::Unresolved { id: p.id }),
            PacketStatus::Delivered { .. } => ok += u64::from(p.size),
            PacketStatus::Dropped { .. } => failed += u64::from(p.size),
        }
    }
    if ok + failed == 0 {
        return Ok(1.0);
    }
    Ok(ok as f64 / (ok + failed) as f64)
}

pub fn normalized_power(ledger: &PowerLedger, window_len: u32) -> f64 {
    ledger.total_energy() / f64::from(window_len) / MAX_DL_POWER
}

pub fn prb_utilization(result: &SimResult) -> f64 {
    result.utilization_samples().sum::<f64>() / f64::from(result.window_len)
}

pub fn period_metrics(result: &SimResult) -> Result<PeriodMetrics, MetricsError> {
    Ok(PeriodMetrics {
        x: normalized_power(&result.ledger, result.window_len),
        y: delivered_data_ratio(&result.packets)?,
        prb_util: prb_utilization(result),
    })
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Observation over the window of `result`, computed on the merged
/// cell-level arrival stream. Variances are population variances.
pub fn extract_observation(result: &SimResult) -> Observation {
    let packets = &result.packets;
    let window = f64::from(result.window_len);
    let total_bytes: u64 = packets.iter().map(|p| u64::from(p.size)).sum();

    let (interarrival_mean, interarrival_var) =
        mean_var(packets.windows(2).map(|w| f64::from(w[1].arrival - w[0].arrival)));
    let (pktsize_mean, pktsize_var) = mean_var(packets.iter().map(|p| f64::from(p.size)));
    let delay_min = packets.iter().map(|p| p.delay_req()).min().map_or(0.0, f64::from);
    let delay_wavg = if total_bytes == 0 {
        0.0
    } else {
        packets
            .iter()
            .map(|p| f64::from(p.size) * f64::from(p.delay_req()))
            .sum::<f64>()
            / total_bytes as f64
    };

    let mut cap_sum = 0.0;
    let mut cap_n = 0usize;
    for t in 0..result.bytes_sent.len() {
        let sent = result.bytes_sent[t];
        if sent > 0 {
            cap_sum += f64::from(sent) / result.utilization(t);
            cap_n += 1;
        }
    }
    let tx_capability = if cap_n == 0 { 0.0 } else { cap_sum / cap_n as f64 };

    Observation {
        traffic_intensity: total_bytes as f64 / window,
        interarrival_mean,
        interarrival_var,
        pktsize_mean,
        pktsize_var,
        delay_min,
        delay_wavg,
        tx_capability,
    }
}
