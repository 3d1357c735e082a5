//! Command-line front end: train a model, run inference or the baseline,
//! sweep an oracle scenario and build the load-category report.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use celldtx::harness::persist::{
    load_model, load_records, save_convergence, save_model, save_oracle, save_records,
};
use celldtx::harness::{categorize_and_report, run_baseline, run_inference, sweep_scenario, train, ScenarioConfig};

#[derive(Parser)]
#[command(name = "celldtx", version, about = "Cell DTX/DRX simulator and DQN agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it with its convergence log.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
        #[arg(long, default_value = "convergence.csv")]
        convergence: PathBuf,
        /// Print a line every this many episodes (0 for silence).
        #[arg(long, default_value_t = 50)]
        progress: u64,
    },
    /// Run the inference episodes with a trained model.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "model.json")]
        model: PathBuf,
        #[arg(long, default_value = "agent.csv")]
        out: PathBuf,
    },
    /// Run the inference episodes with cell DTX disabled.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "baseline.csv")]
        out: PathBuf,
    },
    /// Evaluate every action on one held-out scenario.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        scenario: u64,
        #[arg(long, default_value_t = 5)]
        repetitions: u32,
        #[arg(long, default_value = "oracle.csv")]
        out: PathBuf,
    },
    /// Compare agent and baseline records per load category.
    Report {
        #[arg(long, default_value = "agent.csv")]
        agent: PathBuf,
        #[arg(long, default_value = "baseline.csv")]
        baseline: PathBuf,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        /// Plot-ready series; skipped when absent.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            common,
            model,
            convergence,
            progress,
        } => {
            let cfg = common.load()?;
            let run = train(&cfg, |episode, trainer| {
                if progress > 0 && (episode + 1) % progress == 0 {
                    let q = trainer.convergence().last().map(|p| p.mean_max_q);
                    eprintln!(
                        "episode {:>5}  buffer {:>6}  steps {:>7}  mean max q {}",
                        episode + 1,
                        trainer.buffer().len(),
                        trainer.steps(),
                        q.map_or_else(|| "-".to_string(), |q| format!("{q:.5}"))
                    );
                }
            })?;
            save_model(&model, &run.model)?;
            save_convergence(&convergence, &run.convergence)?;
            println!(
                "trained on {} experiences with {} steps; model {}",
                run.experiences,
                run.train_steps,
                model.display()
            );
        }
        Command::Infer { common, model, out } => {
            let cfg = common.load()?;
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let records = run_inference(&cfg, &m)?;
            save_records(&out, &records)?;
            println!("{} records written to {}", records.len(), out.display());
        }
        Command::Baseline { common, out } => {
            let cfg = common.load()?;
            let records = run_baseline(&cfg)?;
            save_records(&out, &records)?;
            println!("{} records written to {}", records.len(), out.display());
        }
        Command::Sweep {
            common,
            scenario,
            repetitions,
            out,
        } => {
            let cfg = common.load()?;
            let (probe, table) = sweep_scenario(&cfg, scenario, repetitions)?;
            save_oracle(&out, &table.rows)?;
            let best = table.best_row();
            println!(
                "scenario {} capacity {} ues {}: best ({},{}) reward {:.5} x {:.5} y {:.5}",
                probe.id,
                probe.cell.capacity,
                probe.cell.ue_profiles.len(),
                best.cycle_length,
                best.on_duration,
                best.mean_reward,
                best.mean_x,
                best.mean_y
            );
        }
        Command::Report {
            agent,
            baseline,
            out,
            plot,
        } => {
            let a = load_records(&agent).with_context(|| format!("loading {}", agent.display()))?;
            let b = load_records(&baseline).with_context(|| format!("loading {}", baseline.display()))?;
            let report = categorize_and_report(&a, &b)?;
            let mut w = create(&out)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            if let Some(p) = plot {
                let mut w = create(&p)?;
                report.write_plot_data(&mut w)?;
                w.flush()?;
            }
            print!("{report}");
        }
        Command::Defaults => {
            io::stdout().write_all(ScenarioConfig::default().to_toml_string().as_bytes())?;
        }
    }
    Ok(())
}
