//! Combining the unordered and ordered forecasts into a total forecast,
//! either by plain summation or with a one-hidden-layer network.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ann::{self, to_matrix, Dataset, DenseNet, Standardizer, TrainConfig, TrainReport};
use crate::datastore::Calendar;
use crate::unordered::TargetScale;
use crate::{Error, Result};

pub const HIDDEN_WIDTH: usize = 256;

pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig { learning_rate: 0.01, epochs: 500, weight_decay: 0.01, batch_size: None, seed }
}

/// `c_t = u_t + o_t`.
pub fn combine_sum(u_hat: &[f64], o_hat: &[f64]) -> Result<Vec<f64>> {
    if u_hat.len() != o_hat.len() {
        return Err(Error::Shape(format!("{} unordered vs {} ordered periods", u_hat.len(), o_hat.len())));
    }
    Ok(u_hat.iter().zip(o_hat).map(|(u, o)| u + o).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleInput {
    pub u_hat: Vec<f64>,
    pub o_hat: Vec<f64>,
    pub calendar: Calendar,
}

impl EnsembleInput {
    pub fn width(periods: usize) -> usize {
        2 * periods + Calendar::WIDTH
    }

    pub fn to_vec(&self) -> Result<Vec<f64>> {
        if self.u_hat.len() != self.o_hat.len() {
            return Err(Error::Shape("sub-model forecasts differ in length".into()));
        }
        let mut v = Vec::with_capacity(Self::width(self.u_hat.len()));
        v.extend_from_slice(&self.u_hat);
        v.extend_from_slice(&self.o_hat);
        v.extend_from_slice(&self.calendar.encode());
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    periods: usize,
    inputs: Standardizer,
    targets: TargetScale,
    final_loss: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    pub net: DenseNet,
    pub inputs: Standardizer,
    pub targets: TargetScale,
    pub periods: usize,
    pub final_loss: f64,
}

/// Fits the combiner on sub-model forecasts and the totals that followed.
pub fn train_ensemble(
    samples: &[EnsembleInput],
    totals: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<(EnsembleModel, TrainReport)> {
    cfg.validate()?;
    if samples.is_empty() || samples.len() != totals.len() {
        return Err(Error::Training(format!("{} inputs for {} targets", samples.len(), totals.len())));
    }
    let periods = samples[0].u_hat.len();
    if totals.iter().any(|t| t.len() != periods) || samples.iter().any(|s| s.u_hat.len() != periods) {
        return Err(Error::Shape("all samples must cover the same horizon".into()));
    }
    let rows = samples.iter().map(EnsembleInput::to_vec).collect::<Result<Vec<_>>>()?;
    let x = to_matrix(&rows)?;
    let y = to_matrix(totals)?;
    let inputs = Standardizer::fit(&x);
    let targets = TargetScale::fit(&y);
    let data = Dataset::new(inputs.apply(&x)?, y.mapv(|v| (v - targets.mean) / targets.std))?;
    let mut net = DenseNet::new(&[x.ncols(), HIDDEN_WIDTH, periods], cfg.seed)?;
    let report = ann::train(&mut net, &data, cfg)?;
    let final_loss = report.losses.last().copied().unwrap_or(f64::NAN);
    Ok((EnsembleModel { net, inputs, targets, periods, final_loss }, report))
}

impl EnsembleModel {
    pub fn combine_many(&self, inputs: &[EnsembleInput]) -> Result<Vec<Vec<f64>>> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        if inputs.iter().any(|i| i.u_hat.len() != self.periods) {
            return Err(Error::Shape(format!("ensemble expects {} periods", self.periods)));
        }
        let rows = inputs.iter().map(EnsembleInput::to_vec).collect::<Result<Vec<_>>>()?;
        let out = self.net.forward_batch(self.inputs.apply(&to_matrix(&rows)?)?.view())?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|&v| (v * self.targets.std + self.targets.mean).max(0.0)).collect())
            .collect())
    }

    /// Writes `<stem>.hcnn` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.net.save(BufWriter::new(File::create(dir.join(format!("{stem}.hcnn")))?))?;
        let sidecar = Sidecar {
            periods: self.periods,
            inputs: self.inputs.clone(),
            targets: self.targets,
            final_loss: self.final_loss,
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), json)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let net = DenseNet::load(BufReader::new(File::open(dir.join(format!("{stem}.hcnn")))?))?;
        let text = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let s: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Data(e.to_string()))?;
        if net.input_dim() != EnsembleInput::width(s.periods) || net.output_dim() != s.periods {
            return Err(Error::Shape("ensemble sidecar does not match network".into()));
        }
        Ok(Self { net, inputs: s.inputs, targets: s.targets, periods: s.periods, final_loss: s.final_loss })
    }
}

/// Total forecast from one input, clamped at zero.
pub fn combine_ann(model: &EnsembleModel, input: &EnsembleInput) -> Result<Vec<f64>> {
    Ok(model.combine_many(std::slice::from_ref(input))?.remove(0))
}
