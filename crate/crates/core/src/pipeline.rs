//! End-to-end walk-forward run: train every selected method on the early
//! days of a log, then issue a forecast every interval across the held-out
//! days and score them.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::Range;
use std::path::Path;

use crate::ann::TrainConfig;
use crate::baselines::{grid_search, hw_init, naive_forecast, HoltWintersState, Smoothing};
use crate::datastore::{Calendar, HubView, IntervalSpec, TargetKind};
use crate::destshare::{initialize_shares, AlphaConvention, DestShareState, DestinationView};
use crate::ensemble::{self, combine_sum, train_ensemble, EnsembleInput, EnsembleModel};
use crate::eval::{records_for, write_report, MasePooling, Method, MetricReport, RecordSet};
use crate::forest::{fit_time_models, ForestConfig, TimeModels};
use crate::ordered::{dynamic_update, OrderedForecast};
use crate::simnet::{HubId, Network, ParcelLog};
use crate::unordered::{self, build_training_set, observation_times, HorizonModel};
use crate::{Error, Minute, Result, MINUTES_PER_DAY};

/// Which simulated days play which role. Ranges are whole days, end-exclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Observation days used to fit the volume networks and the combiner.
    pub train: Range<u32>,
    /// Observation days used to select Holt-Winters constants and estimate
    /// bands.
    pub validation: Range<u32>,
    /// Observation days that are scored.
    pub test: Range<u32>,
}

impl Split {
    /// Last three days are scored. Of the rest, day 0 is warm-up, day 1 only
    /// feeds history features, and the final three days before a one-day gap
    /// are held out for validation. A gap day separates each block so no
    /// horizon of one block overlaps the next.
    pub fn standard(days: u32) -> Result<Self> {
        if days < 12 {
            return Err(Error::Config(format!("a run needs at least 12 simulated days, got {days}")));
        }
        let test = days - 3..days;
        let validation = days - 7..days - 4;
        let train = 2..days - 8;
        Ok(Self { train, validation, test })
    }

    pub fn validate(&self, days: u32) -> Result<()> {
        let ordered = self.train.start >= 2
            && !self.train.is_empty()
            && !self.validation.is_empty()
            && !self.test.is_empty()
            && self.train.end < self.validation.start
            && self.validation.end < self.test.start
            && self.test.end <= days;
        if !ordered {
            return Err(Error::Config(format!(
                "day split {:?} / {:?} / {:?} must be non-empty, ordered with gap days, start at day 2 and fit in {days} days",
                self.train, self.validation, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub target_hub: String,
    pub interval: Minute,
    pub last_index: usize,
    pub methods: Vec<Method>,
    pub split: Split,
    pub volume_train: TrainConfig,
    pub ensemble_train: TrainConfig,
    pub forest: ForestConfig,
    /// Days between refits of the dwell and travel models.
    pub retrain_days: u32,
    pub band_level: f64,
    pub pooling: MasePooling,
}

impl RunConfig {
    /// All methods on the standard split, seeds derived from `seed`.
    pub fn standard(target_hub: &str, days: u32, seed: u64) -> Result<Self> {
        Ok(Self {
            target_hub: target_hub.to_string(),
            interval: 15,
            last_index: 95,
            methods: Method::ALL.to_vec(),
            split: Split::standard(days)?,
            volume_train: unordered::default_train_config(seed),
            ensemble_train: ensemble::default_train_config(seed.wrapping_add(1)),
            forest: ForestConfig::new(seed.wrapping_add(2)),
            retrain_days: 1,
            band_level: 0.95,
            pooling: MasePooling::Pooled,
        })
    }

    pub fn template(&self) -> IntervalSpec {
        IntervalSpec { interval: self.interval, last_index: self.last_index, t_o: 0 }
    }

    pub fn periods(&self) -> usize {
        self.last_index + 1
    }

    pub fn validate(&self, log: &ParcelLog) -> Result<()> {
        if self.interval == 0 || MINUTES_PER_DAY % self.interval != 0 {
            return Err(Error::Config(format!("interval {} must divide a day", self.interval)));
        }
        if self.periods() as Minute * self.interval > MINUTES_PER_DAY {
            return Err(Error::Config("the horizon may not exceed one day".into()));
        }
        if !self.methods.contains(&Method::Naive) {
            return Err(Error::Config("the naive method is required to score the others".into()));
        }
        if self.retrain_days == 0 {
            return Err(Error::Config("retrain cadence must be at least one day".into()));
        }
        self.volume_train.validate()?;
        self.ensemble_train.validate()?;
        self.split.validate(log.end / MINUTES_PER_DAY)
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

/// Everything a run trained.
#[derive(Debug, Clone, Default)]
pub struct TrainedModels {
    pub unordered: Option<HorizonModel>,
    pub direct: Option<HorizonModel>,
    pub ensemble: Option<EnsembleModel>,
    /// The most recent dwell and travel fit.
    pub time_models: Option<TimeModels>,
    pub holt_winters: Option<Smoothing>,
}

/// One emitted ordered forecast with the size of the snapshot it came from.
#[derive(Debug, Clone)]
pub struct OrderedCheck {
    pub forecast: OrderedForecast,
    pub snapshot_size: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: RecordSet,
    pub report: MetricReport,
    pub models: TrainedModels,
    /// Ordered forecasts issued over the test days.
    pub ordered: Vec<OrderedCheck>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Training(m) => Error::Training(format!("{name}: {m}")),
        Error::Data(m) => Error::Data(format!("{name}: {m}")),
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        other => other,
    })
}

/// Fits dwell and travel models every `cadence` days from `days.start`.
fn fit_daily(
    network: &Network,
    log: &ParcelLog,
    days: Range<u32>,
    cadence: u32,
    cfg: &ForestConfig,
) -> Result<BTreeMap<Minute, TimeModels>> {
    days.step_by(cadence as usize)
        .map(|d| {
            let at = d * MINUTES_PER_DAY;
            fit_time_models(network, log, at, cfg).map(|m| (at, m))
        })
        .collect()
}

fn models_at(fits: &BTreeMap<Minute, TimeModels>, t_o: Minute) -> Result<&TimeModels> {
    fits.range(..=t_o)
        .next_back()
        .map(|(_, m)| m)
        .ok_or_else(|| Error::Data(format!("no time models fitted by minute {t_o}")))
}

/// Holt-Winters forecasts at each of `times`, running the recursion over the
/// total arrival series from day 1.
fn holt_winters_paths(view: &HubView<'_>, cfg: &RunConfig, params: Smoothing, times: &[Minute]) -> Result<Vec<Vec<f64>>> {
    let m = (MINUTES_PER_DAY / cfg.interval) as usize;
    let end = times.iter().copied().max().unwrap_or(MINUTES_PER_DAY);
    let series = series_from_day_one(view, cfg, end)?;
    let mut state: HoltWintersState = hw_init(&series, m, params)?;
    let mut consumed = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t_o in times {
        let upto = ((t_o - MINUTES_PER_DAY) / cfg.interval) as usize;
        while consumed < upto {
            state.step(series[consumed]);
            consumed += 1;
        }
        out.push(state.forecast_path(cfg.periods()));
    }
    Ok(out)
}

fn series_from_day_one(view: &HubView<'_>, cfg: &RunConfig, end: Minute) -> Result<Vec<f64>> {
    let n = ((end - MINUTES_PER_DAY) / cfg.interval) as usize;
    if n == 0 {
        return Ok(Vec::new());
    }
    let spec = IntervalSpec::new(cfg.interval, n - 1, MINUTES_PER_DAY)?;
    Ok(view.bin_arrivals(&spec)?.as_f64())
}

fn select_holt_winters(view: &HubView<'_>, cfg: &RunConfig) -> Result<Smoothing> {
    let m = (MINUTES_PER_DAY / cfg.interval) as usize;
    let series = series_from_day_one(view, cfg, cfg.split.validation.end * MINUTES_PER_DAY)?;
    let score_from = ((cfg.split.validation.start - 1) * MINUTES_PER_DAY / cfg.interval) as usize;
    Ok(grid_search(&series, m, score_from)?.0)
}

/// Runs every selected method and scores the test days.
pub fn run(network: &Network, log: &ParcelLog, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate(log)?;
    let hub: HubId = network.hub_id(&cfg.target_hub)?;
    let view = HubView::new(log, hub);
    let template = cfg.template();
    let split = &cfg.split;
    let val_times = observation_times(split.validation.clone(), cfg.interval);
    let test_times = observation_times(split.test.clone(), cfg.interval);
    let needs_parts = cfg.wants(Method::EnsembleSum) || cfg.wants(Method::EnsembleAnn);

    let mut models = TrainedModels::default();
    let mut forecasts: BTreeMap<Method, (Vec<Vec<f64>>, Vec<Vec<f64>>)> = BTreeMap::new();
    let mut ordered = Vec::new();

    let naive = |times: &[Minute]| {
        times.iter().map(|&t| naive_forecast(&view, &template.at(t))).collect::<Result<Vec<_>>>()
    };
    forecasts.insert(Method::Naive, (stage("naive", naive(&val_times))?, stage("naive", naive(&test_times))?));

    if cfg.wants(Method::HoltWinters) {
        let params = stage("holt-winters", select_holt_winters(&view, cfg))?;
        let v = stage("holt-winters", holt_winters_paths(&view, cfg, params, &val_times))?;
        let t = stage("holt-winters", holt_winters_paths(&view, cfg, params, &test_times))?;
        models.holt_winters = Some(params);
        forecasts.insert(Method::HoltWinters, (v, t));
    }

    if cfg.wants(Method::AnnDirect) {
        let set = stage("ann-direct", build_training_set(&view, TargetKind::Total, &template, split.train.clone()))?;
        let (model, _) = stage("ann-direct", HorizonModel::train(TargetKind::Total, &template, &set, &cfg.volume_train))?;
        let v = model.forecast_many(&view, &val_times)?;
        let t = model.forecast_many(&view, &test_times)?;
        models.direct = Some(model);
        forecasts.insert(Method::AnnDirect, (v, t));
    }

    if needs_parts {
        let set = stage("unordered", build_training_set(&view, TargetKind::Unordered, &template, split.train.clone()))?;
        let (model, _) =
            stage("unordered", HorizonModel::train(TargetKind::Unordered, &template, &set, &cfg.volume_train))?;
        let u_val = model.forecast_many(&view, &val_times)?;
        let u_test = model.forecast_many(&view, &test_times)?;
        models.unordered = Some(model);

        let first_day = if cfg.wants(Method::EnsembleAnn) { split.train.start } else { split.validation.start };
        let fits = stage(
            "time models",
            fit_daily(network, log, first_day..split.test.end, cfg.retrain_days, &cfg.forest),
        )?;
        let issue = |times: &[Minute]| -> Result<Vec<OrderedForecast>> {
            let specs: Vec<IntervalSpec> = times.iter().map(|&t| template.at(t)).collect();
            let mut out = Vec::with_capacity(times.len());
            for day in specs.chunk_by(|a, b| b.t_o == a.t_o + a.interval) {
                out.extend(dynamic_update(network, &view, day, |t| models_at(&fits, t))?);
            }
            Ok(out)
        };
        let o_val = stage("ordered", issue(&val_times))?;
        let o_test = stage("ordered", issue(&test_times))?;
        for f in &o_test {
            ordered.push(OrderedCheck { forecast: f.clone(), snapshot_size: view.snapshot(f.spec.t_o)?.len() });
        }

        let sum = |u: &[Vec<f64>], o: &[OrderedForecast]| {
            u.iter().zip(o).map(|(u, o)| combine_sum(u, &o.as_f64())).collect::<Result<Vec<_>>>()
        };
        if cfg.wants(Method::EnsembleSum) {
            forecasts.insert(Method::EnsembleSum, (sum(&u_val, &o_val)?, sum(&u_test, &o_test)?));
        }
        if cfg.wants(Method::EnsembleAnn) {
            let inputs = |times: &[Minute], u: &[Vec<f64>], o: &[OrderedForecast]| -> Vec<EnsembleInput> {
                times
                    .iter()
                    .zip(u.iter().zip(o))
                    .map(|(&t, (u, o))| EnsembleInput {
                        u_hat: u.clone(),
                        o_hat: o.as_f64(),
                        calendar: Calendar::at(t, cfg.interval),
                    })
                    .collect()
            };
            let train_times = observation_times(split.train.clone(), cfg.interval);
            let u_train = models.unordered.as_ref().expect("trained above").forecast_many(&view, &train_times)?;
            let o_train = stage("ordered", issue(&train_times))?;
            let totals = train_times
                .iter()
                .map(|&t| view.bin_arrivals(&template.at(t)).map(|s| s.as_f64()))
                .collect::<Result<Vec<_>>>()?;
            let train_in = inputs(&train_times, &u_train, &o_train);
            let (model, _) = stage("ensemble", train_ensemble(&train_in, &totals, &cfg.ensemble_train))?;
            let v = model.combine_many(&inputs(&val_times, &u_val, &o_val))?;
            let t = model.combine_many(&inputs(&test_times, &u_test, &o_test))?;
            models.ensemble = Some(model);
            forecasts.insert(Method::EnsembleAnn, (v, t));
        }
        models.time_models = fits.into_values().next_back();
    }

    let mut records = RecordSet::default();
    for (&method, (v, t)) in &forecasts {
        for (times, fc, out) in [(&val_times, v, &mut records.validation), (&test_times, t, &mut records.test)] {
            for (&t_o, f) in times.iter().zip(fc) {
                let actual = view.observable_counts(&template.at(t_o));
                out.extend(records_for(method, t_o, f, &actual));
            }
        }
    }
    let report = records.evaluate(cfg.interval, cfg.periods(), cfg.band_level, cfg.pooling)?;
    Ok(RunOutput { records, report, models, ordered })
}

impl RunOutput {
    /// Writes the report files, `records.csv` and a `models/` directory.
    pub fn save(&self, network: &Network, cfg: &RunConfig, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_report(&self.report, &self.records, cfg.periods(), dir)?;
        self.records.write(BufWriter::new(File::create(dir.join("records.csv"))?))?;
        let models = dir.join("models");
        fs::create_dir_all(&models)?;
        if let Some(m) = &self.models.unordered {
            m.save(&models, "unordered")?;
        }
        if let Some(m) = &self.models.direct {
            m.save(&models, "ann_direct")?;
        }
        if let Some(m) = &self.models.ensemble {
            m.save(&models, "ensemble")?;
        }
        if let Some(m) = &self.models.time_models {
            m.save(network, BufWriter::new(File::create(models.join("time_models.txt"))?))?;
        }
        if let Some(p) = &self.models.holt_winters {
            fs::write(
                models.join("holt_winters.txt"),
                format!("alpha {}\nbeta {}\ngamma {}\n", p.alpha, p.beta, p.gamma),
            )?;
        }
        Ok(())
    }
}

/// Result of replaying destination shares across the test days.
#[derive(Debug, Clone)]
pub struct DestShareRun {
    pub initial: DestShareState,
    pub state: DestShareState,
    /// Largest row-sum error seen after initialization and each update.
    pub max_row_error: f64,
    pub updates: usize,
    /// `(t_o, per-period per-destination volumes)` when a forecast model was
    /// supplied.
    pub allocations: Vec<(Minute, Vec<Vec<f64>>)>,
}

/// Initializes shares over the training observation times, then at each test
/// observation time folds in the most recent fully observed horizon and
/// splits the unordered forecast, if a model is given.
pub fn destination_shares(
    network: &Network,
    log: &ParcelLog,
    cfg: &RunConfig,
    alpha: f64,
    convention: AlphaConvention,
    model: Option<&HorizonModel>,
) -> Result<DestShareRun> {
    cfg.validate(log)?;
    let hub = network.hub_id(&cfg.target_hub)?;
    let dest = DestinationView::new(network, log, hub);
    let view = HubView::new(log, hub);
    let template = cfg.template();
    let history = observation_times(cfg.split.train.clone(), cfg.interval)
        .into_iter()
        .map(|t| dest.unordered_counts(&template.at(t)))
        .collect::<Result<Vec<_>>>()?;
    let initial = initialize_shares(&dest.destinations, &history, alpha, convention)?;
    let mut state = initial.clone();
    let mut max_row_error = state.max_row_error();
    let mut allocations = Vec::new();
    let lag = cfg.periods() as Minute * cfg.interval;
    let test_times = observation_times(cfg.split.test.clone(), cfg.interval);
    for &t_o in &test_times {
        state.update(&dest.unordered_counts(&template.at(t_o - lag))?)?;
        max_row_error = max_row_error.max(state.max_row_error());
        if let Some(m) = model {
            allocations.push((t_o, state.allocate(&m.forecast(&view, t_o)?)?));
        }
    }
    Ok(DestShareRun { initial, state, max_row_error, updates: test_times.len(), allocations })
}
