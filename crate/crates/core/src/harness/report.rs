//! Load-category comparison of agent and baseline records.
//!
//! A cell's category is fixed by its mean baseline PRB utilization over the
//! inference steps: light `[0, 0.4)`, medium `[0.4, 0.8]`, heavy `(0.8, 1]`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeRecord, RecordMode};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadCategory {
    Light,
    Medium,
    Heavy,
}

impl LoadCategory {
    pub const ALL: [LoadCategory; 3] = [LoadCategory::Light, LoadCategory::Medium, LoadCategory::Heavy];

    pub fn from_utilization(u: f64) -> Self {
        if u < 0.4 {
            LoadCategory::Light
        } else if u <= 0.8 {
            LoadCategory::Medium
        } else {
            LoadCategory::Heavy
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LoadCategory::Light => "light",
            LoadCategory::Medium => "medium",
            LoadCategory::Heavy => "heavy",
        }
    }
}

impl fmt::Display for LoadCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Means over all cell-steps of a category. Every value is `None` when the
/// category holds no cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: LoadCategory,
    pub cells: usize,
    pub samples: usize,
    pub agent_power: Option<f64>,
    pub baseline_power: Option<f64>,
    pub agent_ratio: Option<f64>,
    pub baseline_ratio: Option<f64>,
    /// `1 - agent_power / baseline_power`.
    pub energy_saving: Option<f64>,
    /// `1 - agent_ratio / baseline_ratio`.
    pub rate_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub categories: Vec<CategoryStats>,
}

impl LoadReport {
    pub fn get(&self, category: LoadCategory) -> &CategoryStats {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .expect("report holds every category")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.categories {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Bar-chart series: one line per category with the saving and the
    /// delivered-data ratios of both policies, in percent.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        writeln!(out, "# category energy_saving_pct agent_ratio_pct baseline_ratio_pct")?;
        let pct = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |v| format!("{:.4}", 100.0 * v));
        for c in &self.categories {
            writeln!(
                out,
                "{} {} {} {}",
                c.category,
                pct(c.energy_saving),
                pct(c.agent_ratio),
                pct(c.baseline_ratio)
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        writeln!(
            f,
            "{:<8} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "load", "cells", "x_agent", "x_base", "y_agent", "y_base", "saving", "loss"
        )?;
        for c in &self.categories {
            writeln!(
                f,
                "{:<8} {:>6} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
                c.category.name(),
                c.cells,
                num(c.agent_power),
                num(c.baseline_power),
                num(c.agent_ratio),
                num(c.baseline_ratio),
                pct(c.energy_saving),
                pct(c.rate_loss)
            )?;
        }
        Ok(())
    }
}

type CellKey = (u64, u64, u64);

/// Pairs agent and baseline records by (seed, episode, cell, step) and
/// aggregates them per load category. Both sets must cover exactly the same
/// cell-steps.
pub fn categorize_and_report(agent: &[EpisodeRecord], baseline: &[EpisodeRecord]) -> Result<LoadReport, HarnessError> {
    if agent.len() != baseline.len() {
        return Err(HarnessError::Records(format!(
            "{} agent records against {} baseline records",
            agent.len(),
            baseline.len()
        )));
    }
    if agent.iter().any(|r| r.mode != RecordMode::Agent) || baseline.iter().any(|r| r.mode != RecordMode::Baseline) {
        return Err(HarnessError::Records("records passed in the wrong argument".into()));
    }
    let base_by_key: BTreeMap<_, _> = baseline.iter().map(|r| (r.key(), r)).collect();
    if base_by_key.len() != baseline.len() {
        return Err(HarnessError::Records("duplicate baseline records".into()));
    }

    let mut util: BTreeMap<CellKey, (f64, usize)> = BTreeMap::new();
    for r in baseline {
        let e = util.entry((r.seed, r.episode, r.cell)).or_default();
        e.0 += r.prb_util;
        e.1 += 1;
    }

    #[derive(Default)]
    struct Acc {
        cells: std::collections::BTreeSet<CellKey>,
        n: usize,
        xa: f64,
        xb: f64,
        ya: f64,
        yb: f64,
    }
    let mut acc: BTreeMap<LoadCategory, Acc> = BTreeMap::new();
    for a in agent {
        let b = base_by_key
            .get(&a.key())
            .ok_or_else(|| HarnessError::Records(format!("no baseline record for {:?}", a.key())))?;
        let cell = (a.seed, a.episode, a.cell);
        let (sum, n) = util[&cell];
        let e = acc.entry(LoadCategory::from_utilization(sum / n as f64)).or_default();
        e.cells.insert(cell);
        e.n += 1;
        e.xa += a.x;
        e.xb += b.x;
        e.ya += a.y;
        e.yb += b.y;
    }

    let categories = LoadCategory::ALL
        .iter()
        .map(|&category| match acc.get(&category) {
            Some(e) if e.n > 0 => {
                let n = e.n as f64;
                let (xa, xb, ya, yb) = (e.xa / n, e.xb / n, e.ya / n, e.yb / n);
                CategoryStats {
                    category,
                    cells: e.cells.len(),
                    samples: e.n,
                    agent_power: Some(xa),
                    baseline_power: Some(xb),
                    agent_ratio: Some(ya),
                    baseline_ratio: Some(yb),
                    energy_saving: Some(1.0 - xa / xb),
                    rate_loss: Some(1.0 - ya / yb),
                }
            }
            _ => CategoryStats {
                category,
                cells: 0,
                samples: 0,
                agent_power: None,
                baseline_power: None,
                agent_ratio: None,
                baseline_ratio: None,
                energy_saving: None,
                rate_loss: None,
            },
        })
        .collect();
    Ok(LoadReport { categories })
}
