//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use celldtx::actionspace::DtxConfig;
use celldtx::agent::ConvergencePoint;
use celldtx::cellsim::{self, plan_sleep, CellScenario, SleepMode};
use celldtx::harness::oracle::probe_scenario;
use celldtx::harness::persist::{write_csv, write_model};
use celldtx::harness::{
    categorize_and_report, oracle_sweep, run_baseline, run_inference, train, LoadCategory, LoadReport, Model,
    ScenarioConfig,
};
use celldtx::metrics::period_metrics;
use celldtx::rewards::{reward_linear, reward_qos_approx, reward_qos_threshold, RewardSpec};
use celldtx::traffic::UeProfile;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs a criterion and prints its line; the runtime bound is part of the
/// verdict.
fn criterion(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "criterion {id}: {} {name}: {} [{:.1} s, limit {} s{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn grid(step: f64, upto: f64) -> Vec<f64> {
    let n = (upto / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

fn rewards_suite() -> Outcome {
    let examples = [
        (reward_qos_approx(0.0, 0.9, 0.9, 2.0, 2.0), -0.55),
        (reward_qos_approx(0.5, 0.8, 0.9, 2.0, 2.0), -(16.0 * 1.2 + 0.5) / 17.0),
        (reward_qos_approx(0.5, 1.0, 0.9, 2.0, 2.0), -0.5),
        (reward_qos_threshold(0.3, 0.95, 1.0, 1.9, 0.9), -0.3),
        (reward_qos_threshold(0.0, 0.8, 1.0, 1.9, 0.9), -1.1),
        (reward_linear(0.5, 1.0, 0.75), -0.125),
        (reward_linear(0.3, 0.0, 0.0), -0.3),
    ];
    let worst_example = examples.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let hand = (reward_qos_approx(0.5, 0.8, 0.9, 2.0, 2.0) + 1.158_823_529_4).abs() < 1e-9;

    let ys = grid(0.01, 1.0);
    let mut ordered = true;
    let (mut upper_min, mut lower_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in grid(0.01, 1.0) {
        for &y in &ys {
            let r = reward_qos_threshold(x, y, 1.0, 1.9, 0.9);
            if y >= 0.9 {
                upper_min = upper_min.min(r);
            } else {
                lower_max = lower_max.max(r);
            }
        }
    }
    ordered &= upper_min >= lower_max - 1e-12;

    let mut monotone = true;
    for alpha in [2.0, 3.0] {
        for x in grid(0.1, 0.9) {
            for w in ys.windows(2) {
                monotone &= reward_qos_approx(x, w[1], 0.9, 2.0, alpha) >= reward_qos_approx(x, w[0], 0.9, 2.0, alpha) - 1e-12;
            }
        }
    }
    let h = 1e-3;
    let mut largest_step: f64 = 0.0;
    for x in grid(h, 0.95) {
        for yi in 0..1000 {
            let y = yi as f64 * h;
            let here = reward_qos_approx(x, y, 0.9, 2.0, 3.0);
            largest_step = largest_step
                .max((reward_qos_approx(x, y + h, 0.9, 2.0, 3.0) - here).abs())
                .max((reward_qos_approx(x + h, y, 0.9, 2.0, 3.0) - here).abs());
        }
    }
    let continuous = largest_step < 50.0 * h;
    outcome(
        worst_example < 1e-9 && hand && ordered && monotone && continuous,
        format!(
            "example error {worst_example:.1e}; threshold upper min {upper_min:.3} >= lower max {lower_max:.3}; \
             approx monotone in y {monotone}; largest 1e-3 grid step {largest_step:.2e}"
        ),
    )
}

fn sleep_oracle() -> Outcome {
    let modes = [(50.0, 0u32, 0.0), (25.0, 6, 90.0), (1.0, 50, 1000.0)];
    let mut mismatches = 0;
    for gap in 1..=200u32 {
        let best = modes
            .iter()
            .filter(|(_, tt, _)| *tt == 0 || *tt < gap)
            .map(|(p, tt, te)| te + f64::from(gap - tt) * p)
            .fold(f64::INFINITY, f64::min);
        let (mode, e) = plan_sleep(gap);
        if e != best || (gap > 50 && mode != SleepMode::Sm3) {
            mismatches += 1;
        }
    }
    let examples = plan_sleep(8) == (SleepMode::Sm2, 140.0)
        && plan_sleep(4) == (SleepMode::Sm1, 200.0)
        && plan_sleep(60) == (SleepMode::Sm3, 1010.0);
    outcome(
        mismatches == 0 && examples,
        format!("{mismatches} mismatches over gaps 1..=200; examples 8/4/60 hold: {examples}"),
    )
}

fn simulator_ledger() -> Outcome {
    let cell = CellScenario::new(
        1000,
        vec![UeProfile {
            packet_size: 125,
            mean_interarrival: 10,
            delay_req: 50,
        }],
    )
    .unwrap();
    let r = cellsim::run(&cell, &DtxConfig::new(10, 4, 0).unwrap(), 1000, 100, &[]).unwrap();
    let energy = r.ledger.total_energy();
    let x = period_metrics(&r).unwrap().x;
    let fuzz = common::fuzz_simulator(1000, 2024);
    outcome(
        energy == 50_000.0 && x == 0.25 && fuzz.is_ok(),
        format!(
            "zero-traffic energy {energy}, x {x}; 1000 fuzzed episodes: {}",
            fuzz.err().unwrap_or_else(|| "conservation and inactivity invariants hold".into())
        ),
    )
}

struct Pipeline {
    model: Model,
    convergence: Vec<ConvergencePoint>,
    report: LoadReport,
    files: Vec<(&'static str, Vec<u8>)>,
}

fn pipeline(cfg: &ScenarioConfig) -> Pipeline {
    let run = train(cfg, |_, _| {}).expect("training");
    let agent = run_inference(cfg, &run.model).expect("inference");
    let baseline = run_baseline(cfg).expect("baseline");
    let report = categorize_and_report(&agent, &baseline).expect("report");
    let mut files = Vec::new();
    let mut buf = Vec::new();
    write_model(&mut buf, &run.model).unwrap();
    files.push(("model.json", buf));
    let mut buf = Vec::new();
    write_csv(&mut buf, &run.convergence).unwrap();
    files.push(("convergence.csv", buf));
    let mut buf = Vec::new();
    write_csv(&mut buf, &agent).unwrap();
    files.push(("agent.csv", buf));
    let mut buf = Vec::new();
    write_csv(&mut buf, &baseline).unwrap();
    files.push(("baseline.csv", buf));
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    files.push(("report.csv", buf));
    Pipeline {
        model: run.model,
        convergence: run.convergence,
        report,
        files,
    }
}

fn oracle_agreement(cfg: &ScenarioConfig, model: &Model) -> Outcome {
    let probes = 50;
    let mut within = 0;
    let mut exact = 0;
    let mut worst: f64 = 0.0;
    for id in 0..probes {
        let p = probe_scenario(cfg, id, 5).unwrap();
        let table = oracle_sweep(cfg, &p.cell, &p.traces, cfg.train_step_ms, &model.action_space, &cfg.reward).unwrap();
        let choice = model.act(&p.observation).unwrap();
        let regret = table.regret(choice);
        worst = worst.max(regret);
        within += usize::from(regret <= 0.05);
        exact += usize::from(choice == table.best);
    }
    let share = within as f64 / probes as f64;
    outcome(
        share >= 0.8,
        format!("{within}/{probes} probe cells within 0.05 of the oracle best ({exact} exact), worst gap {worst:.4}"),
    )
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "empty".into(), |v| format!("{:.2}%", 100.0 * v))
}

fn directional(qos: &LoadReport, linear: &LoadReport) -> Outcome {
    let light = qos.get(LoadCategory::Light).energy_saving;
    let light_ok = light.is_some_and(|s| s >= 0.30);
    let ratios: Vec<String> = qos
        .categories
        .iter()
        .map(|c| format!("{} {}", c.category, c.agent_ratio.map_or("empty".into(), |y| format!("{y:.4}"))))
        .collect();
    let ratio_ok = qos.categories.iter().all(|c| c.agent_ratio.is_none_or(|y| y >= 0.97));
    let (hq, hl) = (qos.get(LoadCategory::Heavy), linear.get(LoadCategory::Heavy));
    let ordering = match (hq.energy_saving, hl.energy_saving, hq.rate_loss, hl.rate_loss) {
        (Some(sq), Some(sl), Some(lq), Some(ll)) => sl > sq && ll > lq,
        _ => false,
    };
    outcome(
        light_ok && ratio_ok && ordering,
        format!(
            "light saving {} (>= 30%); agent y per category: {}; heavy saving linear {} vs qos_approx {}, \
             heavy rate loss linear {} vs qos_approx {}",
            pct(light),
            ratios.join(", "),
            pct(hl.energy_saving),
            pct(hq.energy_saving),
            pct(hl.rate_loss),
            pct(hq.rate_loss)
        ),
    )
}

/// Population variance of mean-max-Q over the last fifth of the log and its
/// range over the first fifth.
fn stability(points: &[ConvergencePoint]) -> (f64, f64) {
    let q: Vec<f64> = points.iter().map(|p| p.mean_max_q).collect();
    let k = (q.len() / 5).max(1);
    let first = &q[..k];
    let last = &q[q.len() - k..];
    let mean = last.iter().sum::<f64>() / k as f64;
    let var = last.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
    let range = first.iter().copied().fold(f64::NEG_INFINITY, f64::max) - first.iter().copied().fold(f64::INFINITY, f64::min);
    (var, range)
}

fn convergence(qos: &[ConvergencePoint], linear: &[ConvergencePoint], threshold: &[ConvergencePoint]) -> Outcome {
    let describe = |name: &str, pts: &[ConvergencePoint]| {
        let (var, range) = stability(pts);
        let ok = !pts.is_empty() && var < 0.1 * range;
        (ok, format!("{name} var {var:.2e} vs 0.1 x range {:.2e} ({})", 0.1 * range, if ok { "stable" } else { "unstable" }))
    };
    let (qa_ok, qa) = describe("qos_approx", qos);
    let (li_ok, li) = describe("linear", linear);
    let (_, th) = describe("qos_threshold", threshold);
    outcome(qa_ok && li_ok && !threshold.is_empty(), format!("{qa}; {li}; {th}, not required"))
}

fn main() {
    let mut results = Vec::new();
    results.push(criterion(1, "reward unit suite", Duration::from_secs(1), rewards_suite));
    results.push(criterion(2, "gradient oracle", Duration::from_secs(10), || {
        let worst = common::gradient_check(11, 100, 1e-5);
        outcome(worst < 1e-4, format!("max relative error {worst:.2e} over 100 batches (< 1e-4)"))
    }));
    results.push(criterion(3, "one-state bandit regression", Duration::from_secs(30), || {
        let rewards = [-0.12, -0.55, -0.9, -0.31, -0.05];
        let (q, _) = common::train_bandit(&rewards, 0.0, 64, 64, 6000, 3);
        let worst = q.iter().zip(rewards).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        outcome(worst < 1e-3, format!("max |Q - r| {worst:.2e} (< 1e-3)"))
    }));
    results.push(criterion(4, "sleep-energy oracle", Duration::from_secs(1), sleep_oracle));
    results.push(criterion(5, "simulator ledger and fuzz", Duration::from_secs(60), simulator_ledger));

    let qos_cfg = ScenarioConfig::default();
    let linear_cfg = ScenarioConfig {
        reward: RewardSpec::linear_default(),
        ..ScenarioConfig::default()
    };
    let threshold_cfg = ScenarioConfig {
        reward: RewardSpec::threshold_default(),
        ..ScenarioConfig::default()
    };

    let start = Instant::now();
    let qos = pipeline(&qos_cfg);
    let qos_time = start.elapsed();
    results.push(criterion(6, "oracle agreement", Duration::from_secs(15 * 60).saturating_sub(qos_time), || {
        oracle_agreement(&qos_cfg, &qos.model)
    }));
    let mut linear = None;
    results.push(criterion(7, "directional energy/QoS reproduction", Duration::from_secs(10 * 60), || {
        let l = pipeline(&linear_cfg);
        let o = directional(&qos.report, &l.report);
        linear = Some(l);
        o
    }));
    let linear = linear.unwrap();
    results.push(criterion(8, "Q-value convergence", Duration::from_secs(10 * 60), || {
        let t = pipeline(&threshold_cfg);
        convergence(&qos.convergence, &linear.convergence, &t.convergence)
    }));
    results.push(criterion(9, "determinism", Duration::from_secs(10 * 60), || {
        let again = pipeline(&qos_cfg);
        let differing: Vec<&str> = qos
            .files
            .iter()
            .zip(&again.files)
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, _)| a.0)
            .collect();
        let names: Vec<&str> = qos.files.iter().map(|f| f.0).collect();
        outcome(
            differing.is_empty(),
            if differing.is_empty() {
                format!("byte-identical {}", names.join(", "))
            } else {
                format!("differing: {}", differing.join(", "))
            },
        )
    }));

    println!("\n{}", qos.report);
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
