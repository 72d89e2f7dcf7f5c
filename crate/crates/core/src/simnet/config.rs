use serde::Deserialize;

use crate::{Error, Minute, Result, MINUTES_PER_DAY};

/// Simulation parameters, read from a TOML file (see `fixtures/demo_sim.toml`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon_days: u32,
    pub interval_minutes: Minute,
    pub seed: u64,
    pub demand: DemandProfile,
    pub travel: TravelNoise,
    pub dwell: DwellProfile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandProfile {
    /// Parcels per hour for any access pair without an explicit rate.
    pub default_rate: f64,
    pub hourly_shape: Vec<f64>,
    pub weekday_multiplier: Vec<f64>,
    #[serde(default)]
    pub daily_sigma: f64,
    #[serde(rename = "pair", default)]
    pub pairs: Vec<PairRate>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRate {
    pub origin: String,
    pub destination: String,
    pub rate: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelNoise {
    pub noise_sigma: f64,
    /// `[hour, factor]` knots of a piecewise-linear daily curve.
    pub congestion: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwellProfile {
    pub access: GammaDwell,
    pub local: GammaDwell,
    pub gateway: GammaDwell,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaDwell {
    pub mean: f64,
    pub shape: f64,
    #[serde(default)]
    pub congestion_sensitivity: f64,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn demo() -> Self {
        Self::from_toml(include_str!("../../fixtures/demo_sim.toml"))
            .expect("bundled simulation fixture parses")
    }

    pub fn end_minute(&self) -> Minute {
        self.horizon_days * MINUTES_PER_DAY
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon_days < 1 {
            return bad("horizon_days must be at least 1".into());
        }
        if self.interval_minutes == 0 || MINUTES_PER_DAY % self.interval_minutes != 0 {
            return bad(format!(
                "interval_minutes = {} must be positive and divide 1440",
                self.interval_minutes
            ));
        }
        let d = &self.demand;
        if d.hourly_shape.len() != 24 {
            return bad(format!("hourly_shape needs 24 entries, got {}", d.hourly_shape.len()));
        }
        if d.weekday_multiplier.len() != 7 {
            return bad(format!(
                "weekday_multiplier needs 7 entries, got {}",
                d.weekday_multiplier.len()
            ));
        }
        let rates = d
            .hourly_shape
            .iter()
            .chain(&d.weekday_multiplier)
            .chain(std::iter::once(&d.default_rate))
            .chain(d.pairs.iter().map(|p| &p.rate));
        for &r in rates {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("demand rates must be finite and non-negative, got {r}"));
            }
        }
        if !(d.daily_sigma >= 0.0 && self.travel.noise_sigma >= 0.0) {
            return bad("noise sigmas must be non-negative".into());
        }
        if self.travel.congestion.is_empty() {
            return bad("congestion curve needs at least one knot".into());
        }
        let mut last = -1.0;
        for &[hour, factor] in &self.travel.congestion {
            if !(0.0..24.0).contains(&hour) || hour <= last {
                return bad("congestion knots need increasing hours in [0, 24)".into());
            }
            if !(factor > 0.0) {
                return bad("congestion factors must be positive".into());
            }
            last = hour;
        }
        for (name, g) in [
            ("access", self.dwell.access),
            ("local", self.dwell.local),
            ("gateway", self.dwell.gateway),
        ] {
            if !(g.mean > 0.0 && g.shape > 0.0 && g.congestion_sensitivity >= 0.0) {
                return bad(format!("dwell.{name} needs positive mean and shape"));
            }
        }
        Ok(())
    }

    /// Congestion factor at a (fractional) hour of the day.
    pub fn congestion(&self, hour: f64) -> f64 {
        let knots = &self.travel.congestion;
        let hour = hour.rem_euclid(24.0);
        let n = knots.len();
        if n == 1 {
            return knots[0][1];
        }
        // Find the surrounding knots, wrapping past midnight.
        let next = knots.iter().position(|k| k[0] > hour).unwrap_or(n);
        let (lo, hi) = if next == 0 || next == n {
            let (a, b) = (knots[n - 1], knots[0]);
            (a, [b[0] + 24.0, b[1]])
        } else {
            (knots[next - 1], knots[next])
        };
        let h = if hour < lo[0] { hour + 24.0 } else { hour };
        let w = (h - lo[0]) / (hi[0] - lo[0]);
        lo[1] + w * (hi[1] - lo[1])
    }
}
