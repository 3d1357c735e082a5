//! Oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use std::collections::VecDeque;

use celldtx::actionspace::DtxConfig;
use celldtx::agent::{AgentConfig, Experience, Trainer};
use celldtx::cellsim::{self, CellScenario, SimResult};
use celldtx::metrics::Observation;
use celldtx::neural::{Mlp, TrainSample};
use celldtx::traffic::{generate_cell_trace, ArrivalMode, Packet, PacketStatus, TrafficSets, UeProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest relative error between the analytic gradient and central finite
/// differences of the single-sample loss, over `batches` random batches on
/// a random 8-5-5-3 network with random biases. Entries where both values
/// are below `1e-10` count as agreeing.
pub fn gradient_check(seed: u64, batches: usize, h: f64) -> f64 {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..batches {
        let mut net = Mlp::init(&mut r, &[8, 5, 5, 3]).unwrap();
        // move biases off zero so no pre-activation sits exactly on a ReLU kink
        for layer in net.layers_mut() {
            layer.bias.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let n = r.random_range(1..=8);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..8).map(|_| normal.sample(&mut r)).collect()).collect();
        let samples: Vec<TrainSample<'_>> = inputs
            .iter()
            .map(|x| TrainSample {
                input: x,
                action: r.random_range(0..3),
                target: r.random_range(-3.0..3.0),
            })
            .collect();
        let (_, grads) = net.backward(&samples).unwrap();
        let analytic = grads.flat();
        let params = net.params();
        for (i, a) in analytic.iter().enumerate() {
            let mut p = params.clone();
            p[i] = params[i] + h;
            net.set_params(&p).unwrap();
            let plus = net.loss(&samples).unwrap();
            p[i] = params[i] - h;
            net.set_params(&p).unwrap();
            let minus = net.loss(&samples).unwrap();
            let numeric = (plus - minus) / (2.0 * h);
            let scale = a.abs().max(numeric.abs());
            if scale > 1e-10 {
                worst = worst.max((a - numeric).abs() / scale);
            }
        }
        net.set_params(&params).unwrap();
    }
    worst
}

pub fn bandit_config(batch: usize, hidden: usize) -> AgentConfig {
    AgentConfig {
        hidden_layers: vec![hidden, hidden],
        batch_size: batch,
        buffer_capacity: 10_000,
        threshold_batches: 1,
        ..AgentConfig::default()
    }
}

pub fn bandit_state() -> Observation {
    Observation::from_array([0.3, 12.0, 140.0, 310.0, 9000.0, 50.0, 72.0, 900.0])
}

/// Trains on a one-state buffer holding `per_action` experiences of every
/// action with the given rewards and returns the network outputs at that
/// state after `steps` training steps, with the per-action sample means.
pub fn train_bandit(
    rewards: &[f64],
    noise: f64,
    per_action: usize,
    batch: usize,
    steps: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut trainer = Trainer::new(bandit_config(batch, 32), rewards.len(), &mut r).unwrap();
    let state = bandit_state();
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let mut sums = vec![0.0; rewards.len()];
    for i in 0..per_action * rewards.len() {
        let action = i % rewards.len();
        let reward = rewards[action] + if noise > 0.0 { normal.sample(&mut r) } else { 0.0 };
        sums[action] += reward;
        trainer.push(Experience { state, action, reward });
    }
    trainer.fit_normalizers_once().unwrap();
    for _ in 0..steps {
        trainer.train_step(&mut r).unwrap();
    }
    let q = trainer
        .net()
        .forward_normalized(&state.to_array(), trainer.normalizers().unwrap())
        .unwrap();
    let means = sums.iter().map(|s| s / per_action as f64).collect();
    (q, means)
}

/// Straightforward reimplementation of the FIFO cell simulator used as an
/// oracle: returns per-packet outcomes and bytes sent in every TTI of
/// `[0, window_len + drain)`.
pub fn reference_sim(
    capacity: u32,
    config: &DtxConfig,
    window_len: u32,
    drain: u32,
    arrivals: &[Packet],
) -> (Vec<PacketStatus>, Vec<u32>) {
    let mut left: Vec<u32> = arrivals.iter().map(|p| p.size).collect();
    let mut status = vec![PacketStatus::Pending; arrivals.len()];
    let mut sent = Vec::new();
    let mut queue = VecDeque::new();
    for t in 0..window_len + drain {
        for (i, p) in arrivals.iter().enumerate() {
            if p.arrival == t {
                queue.push_back(i);
            }
        }
        let mut kept = VecDeque::new();
        for i in queue.drain(..) {
            if arrivals[i].deadline <= t {
                status[i] = PacketStatus::Dropped { at: t };
            } else {
                kept.push_back(i);
            }
        }
        queue = kept;
        let active = (u64::from(t) + u64::from(config.cycle_length()) - u64::from(config.start_offset() % config.cycle_length()))
            % u64::from(config.cycle_length())
            < u64::from(config.on_duration());
        let mut budget = if active { capacity } else { 0 };
        while budget > 0 && !queue.is_empty() {
            let i = queue[0];
            let take = left[i].min(budget);
            left[i] -= take;
            budget -= take;
            if left[i] == 0 {
                status[i] = PacketStatus::Delivered { at: t };
                queue.pop_front();
            }
        }
        sent.push(if active { capacity - budget } else { 0 });
    }
    (status, sent)
}

pub fn random_config<R: Rng>(r: &mut R) -> DtxConfig {
    if r.random_bool(0.1) {
        return DtxConfig::ALWAYS_ACTIVE;
    }
    let cycle = r.random_range(2..=128);
    let on = r.random_range(1..cycle);
    let offset = r.random_range(0..cycle);
    DtxConfig::new(cycle, on, offset).unwrap()
}

pub fn random_cell<R: Rng>(r: &mut R) -> CellScenario {
    let sets = TrafficSets::default();
    let n = r.random_range(1..=15);
    let profiles: Vec<UeProfile> = (0..n)
        .map(|_| UeProfile {
            packet_size: sets.packet_sizes[r.random_range(0..sets.packet_sizes.len())],
            mean_interarrival: sets.mean_interarrivals[r.random_range(0..sets.mean_interarrivals.len())],
            delay_req: sets.delay_reqs[r.random_range(0..sets.delay_reqs.len())],
        })
        .collect();
    CellScenario::new(r.random_range(50..=3000), profiles).unwrap()
}

/// Checks one fuzzed simulation against the reference and the invariants;
/// returns a description of the first violation.
pub fn check_simulation(result: &SimResult, arrivals: &[Packet]) -> Result<(), String> {
    let cfg = result.config;
    let (status, sent) = reference_sim(result.capacity, &cfg, result.window_len, result.drain, arrivals);
    for (p, s) in result.packets.iter().zip(&status) {
        if p.status != *s {
            return Err(format!("packet {} status {:?}, reference {:?}", p.id, p.status, s));
        }
        match p.status {
            PacketStatus::Delivered { at } => {
                if at >= p.deadline || at < p.arrival || !cfg.active_in_tti(u64::from(at)) || p.remaining != 0 {
                    return Err(format!("packet {} delivered at {at} illegally", p.id));
                }
            }
            PacketStatus::Dropped { at } => {
                if at != p.deadline {
                    return Err(format!("packet {} dropped at {at}, deadline {}", p.id, p.deadline));
                }
            }
            PacketStatus::Pending => return Err(format!("packet {} unresolved after drain", p.id)),
        }
    }
    for (t, (&a, &b)) in result.bytes_sent.iter().zip(&sent).enumerate() {
        if a != b {
            return Err(format!("tti {t}: sent {a}, reference {b}"));
        }
        if a > 0 && !cfg.active_in_tti(t as u64) {
            return Err(format!("tti {t}: transmission while inactive"));
        }
        if a > result.capacity {
            return Err(format!("tti {t}: {a} bytes exceed capacity"));
        }
    }
    let arrived: u64 = arrivals.iter().map(|p| u64::from(p.size)).sum();
    let delivered: u64 = result.packets.iter().filter(|p| p.is_delivered()).map(|p| u64::from(p.size)).sum();
    let dropped: u64 = result
        .packets
        .iter()
        .filter(|p| matches!(p.status, PacketStatus::Dropped { .. }))
        .map(|p| u64::from(p.size))
        .sum();
    if delivered + dropped != arrived {
        return Err(format!("bytes: {delivered} delivered + {dropped} dropped != {arrived} arrived"));
    }
    let transmitted: u64 = sent.iter().map(|&s| u64::from(s)).sum();
    let served: u64 = result.packets.iter().map(|p| u64::from(p.size - p.remaining)).sum();
    if transmitted != served {
        return Err(format!("bytes: {transmitted} transmitted, {served} served"));
    }
    let ledger = &result.ledger;
    let parts: f64 = ledger.tti_power.iter().sum();
    if (parts - ledger.total_energy()).abs() > 1e-6 * ledger.total_energy() {
        return Err(format!("ledger parts {parts} != total {}", ledger.total_energy()));
    }
    let avg = ledger.average_power();
    if !(1.0..=200.0).contains(&avg) {
        return Err(format!("average power {avg} outside [1, 200]"));
    }
    Ok(())
}

/// Fuzzes `episodes` random cells, patterns and traces.
pub fn fuzz_simulator(episodes: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for e in 0..episodes {
        let cell = random_cell(&mut r);
        let cfg = random_config(&mut r);
        let window = r.random_range(1..=800);
        let mode = if r.random_bool(0.2) { ArrivalMode::Deterministic } else { ArrivalMode::Poisson };
        let trace = generate_cell_trace(&cell.ue_profiles, window, mode, &mut r);
        let result = cellsim::run(&cell, &cfg, window, 100, &trace).map_err(|err| format!("episode {e}: {err}"))?;
        check_simulation(&result, &trace).map_err(|err| format!("episode {e} ({cfg:?}): {err}"))?;
    }
    Ok(())
}
