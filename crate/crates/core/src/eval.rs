//! Forecast scoring: MAE, MASE against the naive forecast, horizon buckets,
//! empirical residual bands and the report files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Minute, Result};

pub const REPORT_HEADER: &str = "#hubcast-report v1";
pub const RECORDS_HEADER: &str = "#hubcast-records v1";

/// Minimum residuals per horizon before a band is reported.
pub const MIN_BAND_RESIDUALS: usize = 20;

/// Horizon buckets by whole hours ahead, upper bounds exclusive.
pub const BUCKET_HOURS: [(u32, u32); 4] = [(0, 4), (4, 8), (8, 16), (16, 24)];
pub const BUCKET_LABELS: [&str; 4] = ["1_4h", "5_8h", "9_16h", "17_24h"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Naive,
    HoltWinters,
    AnnDirect,
    EnsembleSum,
    EnsembleAnn,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Naive, Method::HoltWinters, Method::AnnDirect, Method::EnsembleSum, Method::EnsembleAnn];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::HoltWinters => "holt_winters",
            Method::AnnDirect => "ann_direct",
            Method::EnsembleSum => "ensemble_sum",
            Method::EnsembleAnn => "ensemble_ann",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRecord {
    pub method: Method,
    pub t_o: Minute,
    pub horizon: usize,
    pub forecast: f64,
    pub actual: f64,
}

impl ForecastRecord {
    pub fn residual(&self) -> f64 {
        self.actual - self.forecast
    }
}

/// Records for each period of a forecast issued at `t_o`, skipping periods
/// whose actual is not yet known.
pub fn records_for(method: Method, t_o: Minute, forecast: &[f64], actual: &[Option<u32>]) -> Vec<ForecastRecord> {
    forecast
        .iter()
        .zip(actual)
        .enumerate()
        .filter_map(|(t, (&f, a))| {
            a.map(|a| ForecastRecord { method, t_o, horizon: t, forecast: f, actual: a as f64 })
        })
        .collect()
}

pub fn mae(records: &[ForecastRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::UndefinedMetric("no forecasts to score".into()));
    }
    Ok(records.iter().map(|r| (r.actual - r.forecast).abs()).sum::<f64>() / records.len() as f64)
}

fn check_aligned(records: &[ForecastRecord], naive: &[ForecastRecord]) -> Result<()> {
    let same = records.len() == naive.len()
        && records.iter().zip(naive).all(|(a, b)| a.t_o == b.t_o && a.horizon == b.horizon);
    if !same {
        return Err(Error::Shape("forecast and naive records cover different (t_o, horizon) pairs".into()));
    }
    Ok(())
}

/// How per-pair errors are pooled into one MASE value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MasePooling {
    /// Ratio of MAEs over all pairs.
    #[default]
    Pooled,
    /// Mean of the per-observation-time ratios.
    PerObservation,
}

pub fn mase(records: &[ForecastRecord], naive: &[ForecastRecord]) -> Result<f64> {
    check_aligned(records, naive)?;
    let denom = mae(naive)?;
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("naive forecast is exact, MASE is undefined".into()));
    }
    Ok(mae(records)? / denom)
}

pub fn mase_with(records: &[ForecastRecord], naive: &[ForecastRecord], pooling: MasePooling) -> Result<f64> {
    match pooling {
        MasePooling::Pooled => mase(records, naive),
        MasePooling::PerObservation => {
            check_aligned(records, naive)?;
            let mut groups: BTreeMap<Minute, (Vec<ForecastRecord>, Vec<ForecastRecord>)> = BTreeMap::new();
            for (r, n) in records.iter().zip(naive) {
                let g = groups.entry(r.t_o).or_default();
                g.0.push(*r);
                g.1.push(*n);
            }
            if groups.is_empty() {
                return Err(Error::UndefinedMetric("no forecasts to score".into()));
            }
            let ratios = groups.values().map(|(r, n)| mase(r, n)).collect::<Result<Vec<f64>>>()?;
            Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
        }
    }
}

/// Bucket index of a horizon, or `None` beyond 24 hours.
pub fn bucket_of(horizon: usize, interval: Minute) -> Option<usize> {
    let hours = horizon as u32 * interval / 60;
    BUCKET_HOURS.iter().position(|&(lo, hi)| (lo..hi).contains(&hours))
}

/// MASE within each horizon bucket; `None` where the bucket is empty or the
/// naive forecast is exact there.
pub fn bucket_mase(records: &[ForecastRecord], naive: &[ForecastRecord], interval: Minute) -> Result<[Option<f64>; 4]> {
    check_aligned(records, naive)?;
    let mut out = [None; 4];
    for (b, slot) in out.iter_mut().enumerate() {
        let keep = |r: &&ForecastRecord| bucket_of(r.horizon, interval) == Some(b);
        let r: Vec<ForecastRecord> = records.iter().filter(keep).copied().collect();
        let n: Vec<ForecastRecord> = naive.iter().filter(keep).copied().collect();
        *slot = mase(&r, &n).ok();
    }
    Ok(out)
}

/// MASE for each horizon separately.
pub fn horizon_mase(records: &[ForecastRecord], naive: &[ForecastRecord], periods: usize) -> Result<Vec<Option<f64>>> {
    check_aligned(records, naive)?;
    let mut by: Vec<(Vec<ForecastRecord>, Vec<ForecastRecord>)> = vec![Default::default(); periods];
    for (r, n) in records.iter().zip(naive) {
        if let Some(slot) = by.get_mut(r.horizon) {
            slot.0.push(*r);
            slot.1.push(*n);
        }
    }
    Ok(by.iter().map(|(r, n)| mase(r, n).ok()).collect())
}

/// Linearly interpolated sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Residual interval `[lower, upper]` to add to a point forecast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn half_width(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }
}

/// Empirical residual quantiles at `(1 - level) / 2` and `(1 + level) / 2`
/// for each horizon, `None` where fewer than [`MIN_BAND_RESIDUALS`] exist.
pub fn confidence_bands(records: &[ForecastRecord], level: f64, periods: usize) -> Result<Vec<Option<Band>>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("band level {level} must be in (0, 1)")));
    }
    let mut residuals = vec![Vec::new(); periods];
    for r in records {
        if let Some(v) = residuals.get_mut(r.horizon) {
            v.push(r.residual());
        }
    }
    Ok(residuals
        .into_iter()
        .map(|mut v| {
            if v.len() < MIN_BAND_RESIDUALS {
                return None;
            }
            v.sort_by(f64::total_cmp);
            Some(Band { lower: quantile(&v, (1.0 - level) / 2.0), upper: quantile(&v, (1.0 + level) / 2.0) })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    pub method: Method,
    pub mase: f64,
    pub mae: f64,
    pub bucket_mase: [Option<f64>; 4],
    pub horizon_mase: Vec<Option<f64>>,
    pub bands: Vec<Option<Band>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub methods: Vec<MethodMetrics>,
}

impl MetricReport {
    pub fn get(&self, method: Method) -> Option<&MethodMetrics> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Forecast records split by purpose: `validation` feeds the bands, `test`
/// is scored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSet {
    pub validation: Vec<ForecastRecord>,
    pub test: Vec<ForecastRecord>,
}

impl RecordSet {
    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.test.iter().map(|r| r.method).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn test_for(&self, method: Method) -> Vec<ForecastRecord> {
        self.test.iter().filter(|r| r.method == method).copied().collect()
    }

    pub fn validation_for(&self, method: Method) -> Vec<ForecastRecord> {
        self.validation.iter().filter(|r| r.method == method).copied().collect()
    }

    /// Scores every method present in the test records against the naive
    /// records, which must be present.
    pub fn evaluate(&self, interval: Minute, periods: usize, level: f64, pooling: MasePooling) -> Result<MetricReport> {
        let naive = self.test_for(Method::Naive);
        let mut report = MetricReport::default();
        for method in self.methods() {
            let test = self.test_for(method);
            report.methods.push(MethodMetrics {
                method,
                mase: mase_with(&test, &naive, pooling)?,
                mae: mae(&test)?,
                bucket_mase: bucket_mase(&test, &naive, interval)?,
                horizon_mase: horizon_mase(&test, &naive, periods)?,
                bands: confidence_bands(&self.validation_for(method), level, periods)?,
            });
        }
        Ok(report)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{RECORDS_HEADER}")?;
        writeln!(out, "split,method,t_o,horizon,forecast,actual")?;
        for (split, records) in [("validation", &self.validation), ("test", &self.test)] {
            for r in records {
                writeln!(out, "{split},{},{},{},{:?},{:?}", r.method, r.t_o, r.horizon, r.forecast, r.actual)?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut set = RecordSet::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            match i {
                0 if line == RECORDS_HEADER => continue,
                0 => return Err(bad("missing records header")),
                1 => continue,
                _ => {}
            }
            let f: Vec<&str> = line.split(',').collect();
            let [split, method, t_o, horizon, forecast, actual] = f[..] else {
                return Err(bad("expected 6 fields"));
            };
            let r = ForecastRecord {
                method: method.parse().map_err(|_| bad("unknown method"))?,
                t_o: t_o.parse().map_err(|_| bad("bad t_o"))?,
                horizon: horizon.parse().map_err(|_| bad("bad horizon"))?,
                forecast: forecast.parse().map_err(|_| bad("bad forecast"))?,
                actual: actual.parse().map_err(|_| bad("bad actual"))?,
            };
            match split {
                "validation" => set.validation.push(r),
                "test" => set.test.push(r),
                _ => return Err(bad("unknown split")),
            }
        }
        Ok(set)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

/// Writes `summary.csv`, `horizon_mase.csv` and `series.csv` into `dir`.
pub fn write_report(report: &MetricReport, records: &RecordSet, periods: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut s = BufWriter::new(fs::File::create(dir.join("summary.csv"))?);
    writeln!(s, "{REPORT_HEADER}")?;
    write!(s, "method,mase,mae")?;
    for l in BUCKET_LABELS {
        write!(s, ",mase_{l}")?;
    }
    writeln!(s)?;
    for m in &report.methods {
        write!(s, "{},{:.6},{:.6}", m.method, m.mase, m.mae)?;
        for b in m.bucket_mase {
            write!(s, ",{}", fmt_opt(b))?;
        }
        writeln!(s)?;
    }
    s.flush()?;

    let mut h = BufWriter::new(fs::File::create(dir.join("horizon_mase.csv"))?);
    writeln!(h, "{REPORT_HEADER}")?;
    write!(h, "horizon")?;
    for m in &report.methods {
        write!(h, ",{}", m.method)?;
    }
    writeln!(h)?;
    if !report.methods.is_empty() {
        for t in 0..periods {
            write!(h, "{t}")?;
            for m in &report.methods {
                write!(h, ",{}", fmt_opt(m.horizon_mase.get(t).copied().flatten()))?;
            }
            writeln!(h)?;
        }
    }
    h.flush()?;

    let mut p = BufWriter::new(fs::File::create(dir.join("series.csv"))?);
    writeln!(p, "{REPORT_HEADER}")?;
    writeln!(p, "method,t_o,horizon,forecast,actual,lower,upper")?;
    for m in &report.methods {
        for r in records.test.iter().filter(|r| r.method == m.method) {
            let band = m.bands.get(r.horizon).copied().flatten();
            write!(p, "{},{},{},{:.4},{:.4}", r.method, r.t_o, r.horizon, r.forecast, r.actual)?;
            match band {
                Some(b) => writeln!(p, ",{:.4},{:.4}", r.forecast + b.lower, r.forecast + b.upper)?,
                None => writeln!(p, ",NA,NA")?,
            }
        }
    }
    p.flush()?;
    Ok(())
}
