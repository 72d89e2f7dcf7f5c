//! Arrival forecasts for parcels already in the network.
//!
//! Each parcel in an [`ObservationSnapshot`] gets a predicted arrival time at
//! the target hub: the remaining part of its current stay plus predicted
//! travel and dwell times for every leg still ahead. Predicted arrivals are
//! then counted per forecast period.

use crate::datastore::{HubView, IntervalSpec, ObservationSnapshot, Position, SnapshotEntry};
use crate::forest::SegmentTimes;
use crate::simnet::{HubId, Network};
use crate::{Error, Minute, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Dwell(HubId),
    Travel(HubId, HubId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEstimate {
    pub parcel_id: u64,
    pub predicted_arrival: f64,
    /// Predicted minutes for each remaining leg, in journey order.
    pub components: Vec<(Segment, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedForecast {
    pub spec: IntervalSpec,
    pub counts: Vec<u32>,
    /// Parcels predicted to arrive after the forecast window.
    pub overflow: u32,
}

impl OrderedForecast {
    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum::<u64>() + self.overflow as u64
    }
}

fn time_at(t: f64) -> Minute {
    t.max(0.0).floor() as Minute
}

/// Predicts when a snapshot parcel reaches the last hub of its remaining path.
/// The current stay is charged only for the time not yet spent, never less
/// than zero; no dwell is added at the destination of the remaining path.
pub fn predict_arrival<M: SegmentTimes + ?Sized>(
    network: &Network,
    entry: &SnapshotEntry,
    t_o: Minute,
    models: &M,
) -> Result<ArrivalEstimate> {
    let path = &entry.remaining;
    let Some(&target) = path.last() else {
        return Err(Error::Data(format!("parcel {} has no remaining path", entry.parcel_id)));
    };
    for w in path.windows(2) {
        if network.route(w[0], w[1]).is_none() {
            return Err(Error::Data(format!(
                "parcel {}: no route {} in the network",
                entry.parcel_id,
                network.route_name(w[0], w[1])
            )));
        }
    }
    let elapsed = entry.elapsed as f64;
    let mut components = Vec::with_capacity(2 * path.len());
    let mut hops = path.windows(2);
    match entry.position {
        Position::AtHub { hub, since } => {
            if path[0] != hub || hub == target {
                return Err(Error::Data(format!("parcel {} is not at the start of its remaining path", entry.parcel_id)));
            }
            components.push((Segment::Dwell(hub), (models.dwell(hub, since) - elapsed).max(0.0)));
        }
        Position::OnRoute { from, to, since } => {
            if path[0] != to || network.route(from, to).is_none() {
                return Err(Error::Data(format!("parcel {} is on a route that does not lead to its path", entry.parcel_id)));
            }
            components.push((Segment::Travel(from, to), (models.travel(from, to, since) - elapsed).max(0.0)));
            if to != target {
                let at = time_at(t_o as f64 + components[0].1);
                components.push((Segment::Dwell(to), models.dwell(to, at)));
            }
        }
    }
    let mut clock = components.iter().fold(t_o as f64, |t, c| t + c.1);
    for w in &mut hops {
        let travel = models.travel(w[0], w[1], time_at(clock));
        components.push((Segment::Travel(w[0], w[1]), travel));
        clock += travel;
        if w[1] != target {
            let dwell = models.dwell(w[1], time_at(clock));
            components.push((Segment::Dwell(w[1]), dwell));
            clock += dwell;
        }
    }
    Ok(ArrivalEstimate { parcel_id: entry.parcel_id, predicted_arrival: clock, components })
}

/// Predicted arrival counts per period for every parcel in `snapshot`.
pub fn forecast_ordered<M: SegmentTimes + ?Sized>(
    network: &Network,
    snapshot: &ObservationSnapshot,
    spec: &IntervalSpec,
    models: &M,
) -> Result<OrderedForecast> {
    if snapshot.t_o != spec.t_o {
        return Err(Error::Sequence(format!(
            "snapshot taken at {} but forecast issued at {}",
            snapshot.t_o, spec.t_o
        )));
    }
    let mut counts = vec![0u32; spec.periods()];
    let mut overflow = 0;
    let width = spec.interval as f64;
    for entry in &snapshot.entries {
        let est = predict_arrival(network, entry, spec.t_o, models)?;
        let t = ((est.predicted_arrival - spec.t_o as f64) / width).floor() as usize;
        match counts.get_mut(t) {
            Some(c) => *c += 1,
            None => overflow += 1,
        }
    }
    Ok(OrderedForecast { spec: *spec, counts, overflow })
}

/// Re-issues the ordered forecast at each observation time of `specs`, which
/// must advance by exactly one interval. `models_at` supplies the time models
/// in force at each observation time.
pub fn dynamic_update<'m, M, F>(
    network: &Network,
    view: &HubView<'_>,
    specs: &[IntervalSpec],
    mut models_at: F,
) -> Result<Vec<OrderedForecast>>
where
    M: SegmentTimes + ?Sized + 'm,
    F: FnMut(Minute) -> Result<&'m M>,
{
    for w in specs.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.interval != a.interval || b.last_index != a.last_index || b.t_o != a.t_o + a.interval {
            return Err(Error::Sequence(format!(
                "observation at {} does not follow {} by one interval of {} minutes",
                b.t_o, a.t_o, a.interval
            )));
        }
    }
    specs
        .iter()
        .map(|spec| {
            let snapshot = view.snapshot(spec.t_o)?;
            forecast_ordered(network, &snapshot, spec, models_at(spec.t_o)?)
        })
        .collect()
}
