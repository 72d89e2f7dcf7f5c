use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, StandardNormal};

use super::config::{GammaDwell, SimConfig};
use super::network::{HubId, HubKind, Network};
use super::record::{Event, Location, ParcelRecord};
use crate::{Error, Minute, Result, MINUTES_PER_DAY};

// Independent random streams. Arrival counts have their own stream so that
// scaling demand never shifts the draws used for anything else.
const STREAM_COUNTS: u64 = 1;
const STREAM_DAILY: u64 = 2;
const STREAM_ORDER_MINUTE: u64 = 3;
const STREAM_JOURNEY: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Smallest `k` with `P(X <= k) >= u` for `X ~ Poisson(lambda)`.
///
/// For a fixed `u` the result is non-decreasing in `lambda`.
pub fn poisson_quantile(u: f64, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while cdf < u && k < 100_000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
        if p == 0.0 && k as f64 > lambda {
            break;
        }
    }
    k
}

/// Hourly order rates for each planned origin/destination pair.
fn pair_rates(network: &Network, cfg: &SimConfig) -> Result<Vec<(HubId, HubId, f64)>> {
    let mut rates: Vec<(HubId, HubId, f64)> = network
        .feasible_paths()
        .keys()
        .map(|&(o, d)| (o, d, cfg.demand.default_rate))
        .collect();
    for pair in &cfg.demand.pairs {
        let o = network.hub_id(&pair.origin)?;
        let d = network.hub_id(&pair.destination)?;
        let slot = rates
            .iter_mut()
            .find(|(ro, rd, _)| (*ro, *rd) == (o, d))
            .ok_or_else(|| {
                Error::Config(format!(
                    "demand pair {}->{} is not a planned origin/destination pair",
                    pair.origin, pair.destination
                ))
            })?;
        slot.2 = pair.rate;
    }
    Ok(rates)
}

fn hour_of(minute: Minute) -> f64 {
    (minute % MINUTES_PER_DAY) as f64 / 60.0
}

struct Sampler<'a> {
    cfg: &'a SimConfig,
    travel_noise: LogNormal<f64>,
    dwell: [(GammaDwell, Gamma<f64>); 3],
}

impl<'a> Sampler<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        let sigma = cfg.travel.noise_sigma;
        let travel_noise = LogNormal::new(-sigma * sigma / 2.0, sigma)
            .map_err(|e| Error::Config(format!("travel noise: {e}")))?;
        // Unit-mean gamma; the time-of-day mean is applied as a scale factor.
        let unit = |g: GammaDwell| -> Result<(GammaDwell, Gamma<f64>)> {
            let dist = Gamma::new(g.shape, 1.0 / g.shape)
                .map_err(|e| Error::Config(format!("dwell profile: {e}")))?;
            Ok((g, dist))
        };
        Ok(Self {
            cfg,
            travel_noise,
            dwell: [unit(cfg.dwell.access)?, unit(cfg.dwell.local)?, unit(cfg.dwell.gateway)?],
        })
    }

    fn dwell(&self, kind: HubKind, at: Minute, rng: &mut ChaCha8Rng) -> Minute {
        let (profile, dist) = &self.dwell[match kind {
            HubKind::Access => 0,
            HubKind::Local => 1,
            HubKind::Gateway => 2,
        }];
        let load = 1.0 + profile.congestion_sensitivity * (self.cfg.congestion(hour_of(at)) - 1.0);
        let minutes = profile.mean * load.max(0.05) * dist.sample(rng);
        (minutes.round() as Minute).max(1)
    }

    fn travel(&self, base: f64, at: Minute, rng: &mut ChaCha8Rng) -> Minute {
        let minutes = base * self.cfg.congestion(hour_of(at)) * self.travel_noise.sample(rng);
        (minutes.round() as Minute).max(1)
    }
}

/// Generates the parcel log for `network` under `cfg`.
///
/// Orders follow a Poisson process per origin/destination pair whose rate is
/// constant within each hour. Every parcel follows the planned path of its
/// pair, dwelling at each hub (destination included) and travelling each
/// route; stays still open at the end of the log have no departure.
pub fn simulate(network: &Network, cfg: &SimConfig) -> Result<Vec<ParcelRecord>> {
    cfg.validate()?;
    let rates = pair_rates(network, cfg)?;
    if network.routes().is_empty() && rates.iter().any(|r| r.2 > 0.0) {
        return Err(Error::Config("network has no routes but demand is non-zero".into()));
    }

    let mut counts_rng = stream(cfg.seed, STREAM_COUNTS);
    let mut daily_rng = stream(cfg.seed, STREAM_DAILY);
    let mut minute_rng = stream(cfg.seed, STREAM_ORDER_MINUTE);
    let sigma = cfg.demand.daily_sigma;

    let mut orders: Vec<(Minute, HubId, HubId)> = Vec::new();
    for day in 0..cfg.horizon_days {
        let z: f64 = StandardNormal.sample(&mut daily_rng);
        let level = (sigma * z - sigma * sigma / 2.0).exp();
        let weekday = cfg.demand.weekday_multiplier[(day % 7) as usize];
        for hour in 0..24u32 {
            let shape = cfg.demand.hourly_shape[hour as usize];
            let start = day * MINUTES_PER_DAY + hour * 60;
            for &(o, d, rate) in &rates {
                let u: f64 = counts_rng.random();
                let n = poisson_quantile(u, rate * shape * weekday * level);
                for _ in 0..n {
                    orders.push((start + minute_rng.random_range(0..60), o, d));
                }
            }
        }
    }
    orders.sort();

    let sampler = Sampler::new(cfg)?;
    let mut journey_rng = stream(cfg.seed, STREAM_JOURNEY);
    let end = cfg.end_minute();
    let mut parcels = Vec::with_capacity(orders.len());
    for (i, &(order_time, origin, destination)) in orders.iter().enumerate() {
        let path = network
            .path(origin, destination)
            .expect("rates only cover planned pairs")
            .to_vec();
        let mut events = Vec::with_capacity(2 * path.len() - 1);
        let mut t = order_time;
        for (k, &hub) in path.iter().enumerate() {
            let dwell = sampler.dwell(network.hub(hub).kind, t, &mut journey_rng);
            events.push(Event { location: Location::Hub(hub), arrival: t, departure: Some(t + dwell) });
            t += dwell;
            if let Some(&next) = path.get(k + 1) {
                let base = network.route(hub, next).expect("paths follow routes").base_travel_minutes;
                let travel = sampler.travel(base, t, &mut journey_rng);
                events.push(Event {
                    location: Location::Route(hub, next),
                    arrival: t,
                    departure: Some(t + travel),
                });
                t += travel;
            }
        }
        events.retain(|e| e.arrival < end);
        if let Some(last) = events.last_mut() {
            if last.departure.is_some_and(|d| d >= end) {
                last.departure = None;
            }
        }
        parcels.push(ParcelRecord {
            parcel_id: i as u64 + 1,
            order_time,
            origin,
            destination,
            path,
            events,
        });
    }
    Ok(parcels)
}
