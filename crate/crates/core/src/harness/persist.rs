//! Model files (JSON) and CSV outputs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeRecord, Model};
use super::oracle::OracleRow;
use super::HarnessError;
use crate::actionspace::{ActionSpace, DtxAction};
use crate::agent::ConvergencePoint;
use crate::metrics::OBSERVATION_DIM;
use crate::neural::Mlp;
use crate::rewards::RewardSpec;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`Model`]. Parameters are flattened layer by layer,
/// weights (input-major) before biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub seed: u64,
    pub reward: RewardSpec,
    pub actions: Vec<DtxAction>,
    pub layer_sizes: Vec<usize>,
    pub normalizers: [f64; OBSERVATION_DIM],
    pub params: Vec<f64>,
}

impl From<&Model> for ModelFile {
    fn from(m: &Model) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            seed: m.seed,
            reward: m.reward,
            actions: m.action_space.actions().to_vec(),
            layer_sizes: m.net.sizes(),
            normalizers: m.normalizers,
            params: m.net.params(),
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model, HarnessError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(HarnessError::Model(format!("unsupported format version {}", self.format_version)));
        }
        let action_space = ActionSpace::from_actions(self.actions)?;
        let net = Mlp::from_params(&self.layer_sizes, &self.params)?;
        if net.input_dim() != OBSERVATION_DIM || net.output_dim() != action_space.len() {
            return Err(HarnessError::Model(format!(
                "network {:?} does not fit {} features and {} actions",
                self.layer_sizes,
                OBSERVATION_DIM,
                action_space.len()
            )));
        }
        if self.normalizers.iter().any(|n| !(n.is_finite() && *n > 0.0)) {
            return Err(HarnessError::Model("normalizers must be positive and finite".into()));
        }
        self.reward.validate()?;
        Ok(Model {
            net,
            normalizers: self.normalizers,
            action_space,
            reward: self.reward,
            seed: self.seed,
        })
    }
}

pub fn write_model<W: Write>(out: W, model: &Model) -> Result<(), HarnessError> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &ModelFile::from(model))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_model<R: Read>(input: R) -> Result<Model, HarnessError> {
    let file: ModelFile = serde_json::from_reader(input)?;
    file.into_model()
}

pub fn save_model(path: &Path, model: &Model) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model, HarnessError> {
    read_model(BufReader::new(File::open(path)?))
}

/// Serializes rows as CSV with a header taken from the field names.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn save_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    write_csv(BufWriter::new(File::create(path)?), rows)
}

pub fn load_records(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    read_csv(BufReader::new(File::open(path)?))
}

pub fn save_records(path: &Path, records: &[EpisodeRecord]) -> Result<(), HarnessError> {
    save_csv(path, records)
}

pub fn save_convergence(path: &Path, points: &[ConvergencePoint]) -> Result<(), HarnessError> {
    save_csv(path, points)
}

pub fn save_oracle(path: &Path, rows: &[OracleRow]) -> Result<(), HarnessError> {
    save_csv(path, rows)
}
