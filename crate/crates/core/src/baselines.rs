//! Comparison forecasts: additive Holt-Winters smoothing and the previous-day
//! naive forecast.

use crate::datastore::{HubView, IntervalSpec};
use crate::{Error, Result, MINUTES_PER_DAY};

/// Candidate values for each smoothing constant in [`grid_search`].
pub const SMOOTHING_GRID: [f64; 7] = [0.05, 0.20, 0.35, 0.50, 0.65, 0.80, 0.95];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Smoothing {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Additive triple exponential smoothing. `seasonals[pos]` is the seasonal
/// term for the next observation.
#[derive(Debug, Clone, PartialEq)]
pub struct HoltWintersState {
    pub level: f64,
    pub trend: f64,
    pub seasonals: Vec<f64>,
    pub params: Smoothing,
    pub pos: usize,
}

/// Initial state from the first two seasons of `history`: level is the first
/// season's mean, trend the per-step change between season means, and each
/// seasonal the average deviation from its season's mean at that phase.
pub fn hw_init(history: &[f64], m: usize, params: Smoothing) -> Result<HoltWintersState> {
    params.validate()?;
    if m == 0 || history.len() < 2 * m {
        return Err(Error::Training(format!(
            "Holt-Winters needs two seasons of {m} values, got {}",
            history.len()
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / m as f64;
    let (first, second) = (&history[..m], &history[m..2 * m]);
    let (m1, m2) = (mean(first), mean(second));
    let seasonals = (0..m).map(|k| ((first[k] - m1) + (second[k] - m2)) / 2.0).collect();
    Ok(HoltWintersState { level: m1, trend: (m2 - m1) / m as f64, seasonals, params, pos: 0 })
}

impl HoltWintersState {
    pub fn period(&self) -> usize {
        self.seasonals.len()
    }

    pub fn step(&mut self, y: f64) {
        let Smoothing { alpha, beta, gamma } = self.params;
        let s = self.seasonals[self.pos];
        let level = alpha * (y - s) + (1.0 - alpha) * (self.level + self.trend);
        self.trend = beta * (level - self.level) + (1.0 - beta) * self.trend;
        self.level = level;
        self.seasonals[self.pos] = gamma * (y - level) + (1.0 - gamma) * s;
        self.pos = (self.pos + 1) % self.period();
    }

    /// Unclamped forecast `h >= 1` steps past the last observation.
    pub fn forecast(&self, h: usize) -> Result<f64> {
        if h == 0 {
            return Err(Error::Config("forecast step must be at least 1".into()));
        }
        let s = self.seasonals[(self.pos + h - 1) % self.period()];
        Ok(self.level + h as f64 * self.trend + s)
    }

    /// Forecasts for steps `1..=n`, clamped at zero.
    pub fn forecast_path(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|h| self.forecast(h).unwrap_or(0.0).max(0.0)).collect()
    }
}

pub fn hw_step(state: &HoltWintersState, y: f64) -> HoltWintersState {
    let mut next = state.clone();
    next.step(y);
    next
}

pub fn hw_forecast(state: &HoltWintersState, h: usize) -> Result<f64> {
    state.forecast(h)
}

/// Mean absolute one-step-ahead error over `series[score_from..]`, running the
/// recursion over the whole series from its first value.
pub fn one_step_mae(series: &[f64], m: usize, params: Smoothing, score_from: usize) -> Result<f64> {
    let mut state = hw_init(series, m, params)?;
    if score_from >= series.len() {
        return Err(Error::Training("no values to score".into()));
    }
    let mut err = 0.0;
    for (i, &y) in series.iter().enumerate() {
        if i >= score_from {
            err += (state.forecast(1)? - y).abs();
        }
        state.step(y);
    }
    Ok(err / (series.len() - score_from) as f64)
}

/// Smoothing constants from [`SMOOTHING_GRID`] minimizing [`one_step_mae`].
/// Ties keep the earliest candidate in `(alpha, beta, gamma)` order.
pub fn grid_search(series: &[f64], m: usize, score_from: usize) -> Result<(Smoothing, f64)> {
    let mut best: Option<(Smoothing, f64)> = None;
    for &alpha in &SMOOTHING_GRID {
        for &beta in &SMOOTHING_GRID {
            for &gamma in &SMOOTHING_GRID {
                let p = Smoothing { alpha, beta, gamma };
                let mae = one_step_mae(series, m, p, score_from)?;
                if best.is_none_or(|b| mae < b.1) {
                    best = Some((p, mae));
                }
            }
        }
    }
    Ok(best.expect("grid is not empty"))
}

/// Arrivals in the same periods one day earlier.
pub fn naive_forecast(view: &HubView<'_>, spec: &IntervalSpec) -> Result<Vec<f64>> {
    if spec.t_o < MINUTES_PER_DAY {
        return Err(Error::ColdStart(format!("naive forecast at minute {} needs a full day of history", spec.t_o)));
    }
    Ok(view.bin_arrivals(&spec.at(spec.t_o - MINUTES_PER_DAY))?.as_f64())
}
