//! Multi-horizon volume forecasting with a two-hidden-layer network.
//!
//! [`HorizonModel`] maps a [`FeatureVector`] observed at `t_o` to the
//! `T + 1` per-interval volumes that follow. Trained on Type I targets it is
//! the unordered-parcel forecaster; trained on total arrivals it is the
//! direct ANN baseline.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::ops::Range;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::ann::{self, to_matrix, Dataset, DenseNet, Standardizer, TrainConfig, TrainReport};
use crate::datastore::{HubView, IntervalSpec, TargetKind, MIN_HISTORY_MINUTES};
use crate::{Error, Minute, Result, MINUTES_PER_DAY};

pub const HIDDEN_LAYERS: [usize; 2] = [1024, 512];

/// Training hyperparameters used for the volume networks.
pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig { learning_rate: 0.001, epochs: 500, weight_decay: 0.01, batch_size: None, seed }
}

/// Feature rows and target rows for a set of observation times.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub observation_times: Vec<Minute>,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.observation_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observation_times.is_empty()
    }
}

/// Observation times every `I` minutes across whole days of the log.
pub fn observation_times(days: Range<u32>, interval: Minute) -> Vec<Minute> {
    days.flat_map(|d| (0..MINUTES_PER_DAY / interval).map(move |k| d * MINUTES_PER_DAY + k * interval))
        .collect()
}

/// One `(features, target)` pair per observation time in `days`, stepping by
/// the template's interval.
pub fn build_training_set(
    view: &HubView<'_>,
    kind: TargetKind,
    template: &IntervalSpec,
    days: Range<u32>,
) -> Result<TrainingSet> {
    if days.is_empty() {
        return Err(Error::ColdStart("no training days".into()));
    }
    let times = observation_times(days, template.interval);
    if times[0] < MIN_HISTORY_MINUTES {
        return Err(Error::ColdStart(format!(
            "training starts at minute {} but features need {MIN_HISTORY_MINUTES} minutes of history",
            times[0]
        )));
    }
    let mut set = TrainingSet { observation_times: Vec::new(), features: Vec::new(), targets: Vec::new() };
    for t_o in times {
        let spec = template.at(t_o);
        set.features.push(view.build_features(kind, &spec)?.to_vec());
        set.targets.push(view.target(kind, &spec)?.as_f64());
        set.observation_times.push(t_o);
    }
    Ok(set)
}

/// Scalar affine map applied to every target so the network trains near unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    pub fn fit(targets: &Array2<f64>) -> Self {
        let n = targets.len().max(1) as f64;
        let mean = targets.sum() / n;
        let var = targets.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: if var > 1e-12 { var.sqrt() } else { 1.0 } }
    }

    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }
}

/// What a saved model was trained on; written next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub target: String,
    pub interval: Minute,
    pub last_index: usize,
    pub first_observation: Minute,
    pub last_observation: Minute,
    pub samples: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    meta: ModelMeta,
    inputs: Standardizer,
    targets: TargetScale,
}

#[derive(Debug, Clone)]
pub struct HorizonModel {
    pub kind: TargetKind,
    pub net: DenseNet,
    pub inputs: Standardizer,
    pub targets: TargetScale,
    pub meta: ModelMeta,
}

/// The unordered-parcel forecaster.
pub type UnorderedModel = HorizonModel;

fn kind_name(kind: TargetKind) -> &'static str {
    match kind {
        TargetKind::Unordered => "unordered",
        TargetKind::Total => "total",
    }
}

impl HorizonModel {
    /// Fits a `[inputs, 1024, 512, T + 1]` network on `set`.
    pub fn train(
        kind: TargetKind,
        template: &IntervalSpec,
        set: &TrainingSet,
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport)> {
        if set.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        let x = to_matrix(&set.features)?;
        let y = to_matrix(&set.targets)?;
        if y.ncols() != template.periods() {
            return Err(Error::Shape(format!(
                "targets have {} periods, horizon has {}",
                y.ncols(),
                template.periods()
            )));
        }
        let inputs = Standardizer::fit(&x);
        let targets = TargetScale::fit(&y);
        let data = Dataset::new(inputs.apply(&x)?, y.mapv(|v| (v - targets.mean) / targets.std))?;
        let dims = [x.ncols(), HIDDEN_LAYERS[0], HIDDEN_LAYERS[1], template.periods()];
        let mut net = DenseNet::new(&dims, cfg.seed)?;
        let report = ann::train(&mut net, &data, cfg)?;
        let meta = ModelMeta {
            target: kind_name(kind).into(),
            interval: template.interval,
            last_index: template.last_index,
            first_observation: set.observation_times[0],
            last_observation: *set.observation_times.last().expect("non-empty"),
            samples: set.len(),
            learning_rate: cfg.learning_rate,
            epochs: cfg.epochs,
            weight_decay: cfg.weight_decay,
            seed: cfg.seed,
            final_loss: report.losses.last().copied().unwrap_or(f64::NAN),
        };
        Ok((Self { kind, net, inputs, targets, meta }, report))
    }

    pub fn spec(&self, t_o: Minute) -> IntervalSpec {
        IntervalSpec { interval: self.meta.interval, last_index: self.meta.last_index, t_o }
    }

    /// Forecast from raw (unstandardized) feature rows, clamped at zero.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let x = self.inputs.apply(&to_matrix(rows)?)?;
        let out = self.net.forward_batch(x.view())?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|&v| (v * self.targets.std + self.targets.mean).max(0.0)).collect())
            .collect())
    }

    /// Forecast `Û` for the horizon starting at `t_o`.
    pub fn forecast(&self, view: &HubView<'_>, t_o: Minute) -> Result<Vec<f64>> {
        let features = view.build_features(self.kind, &self.spec(t_o))?;
        Ok(self.predict_rows(&[features.to_vec()])?.remove(0))
    }

    pub fn forecast_many(&self, view: &HubView<'_>, times: &[Minute]) -> Result<Vec<Vec<f64>>> {
        if times.is_empty() {
            return Ok(Vec::new());
        }
        let rows = times
            .iter()
            .map(|&t| view.build_features(self.kind, &self.spec(t)).map(|f| f.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        self.predict_rows(&rows)
    }

    /// Writes `<stem>.hcnn` (network) and `<stem>.json` (normalization and metadata).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.net.save(BufWriter::new(File::create(dir.join(format!("{stem}.hcnn")))?))?;
        let sidecar = Sidecar { meta: self.meta.clone(), inputs: self.inputs.clone(), targets: self.targets };
        let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), json)?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let net = DenseNet::load(BufReader::new(File::open(dir.join(format!("{stem}.hcnn")))?))?;
        let text = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Data(e.to_string()))?;
        let kind = match sidecar.meta.target.as_str() {
            "unordered" => TargetKind::Unordered,
            "total" => TargetKind::Total,
            other => return Err(Error::Data(format!("unknown model target `{other}`"))),
        };
        if net.input_dim() != sidecar.inputs.mean.len() || net.output_dim() != sidecar.meta.last_index + 1 {
            return Err(Error::Shape("model sidecar does not match network".into()));
        }
        Ok(Self { kind, net, inputs: sidecar.inputs, targets: sidecar.targets, meta: sidecar.meta })
    }
}
