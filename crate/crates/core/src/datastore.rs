//! Queries over a parcel log: interval binning, Type I / Type II partition,
//! observation snapshots and the feature vectors fed to the networks.
//!
//! Conventions used throughout:
//! * period `t` of an [`IntervalSpec`] covers `[t_o + t*I, t_o + (t+1)*I)`, so an
//!   arrival exactly on a boundary belongs to the later period;
//! * a parcel with `order_time <= t_o` is *ordered* (Type II) at `t_o`, one with
//!   `order_time > t_o` is *unordered* (Type I).

use std::io::Write;

use crate::simnet::{HubId, Location, Network, ParcelLog, ParcelRecord};
use crate::{Error, Minute, Result, MINUTES_PER_DAY};

/// Length of the recent-volume feature window.
pub const RECENT_WINDOW_MINUTES: Minute = 240;

/// Earliest observation time (relative to log start) with a full feature set.
pub const MIN_HISTORY_MINUTES: Minute = MINUTES_PER_DAY + RECENT_WINDOW_MINUTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalSpec {
    /// Interval length `I` in minutes.
    pub interval: Minute,
    /// Last forecast index `T`; the horizon has `T + 1` periods.
    pub last_index: usize,
    /// Observation time `t_o`.
    pub t_o: Minute,
}

impl IntervalSpec {
    pub fn new(interval: Minute, last_index: usize, t_o: Minute) -> Result<Self> {
        if interval == 0 {
            return Err(Error::Config("interval length must be positive".into()));
        }
        Ok(Self { interval, last_index, t_o })
    }

    /// The standard horizon: 15-minute periods over the next 24 hours.
    pub fn day_ahead(t_o: Minute) -> Self {
        Self { interval: 15, last_index: 95, t_o }
    }

    pub fn periods(&self) -> usize {
        self.last_index + 1
    }

    pub fn window_end(&self) -> Minute {
        self.t_o + self.periods() as Minute * self.interval
    }

    pub fn at(&self, t_o: Minute) -> Self {
        Self { t_o, ..*self }
    }

    /// Period containing `minute`, if it falls inside the window.
    pub fn period_of(&self, minute: Minute) -> Option<usize> {
        if minute < self.t_o || minute >= self.window_end() {
            return None;
        }
        Some(((minute - self.t_o) / self.interval) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSeries {
    pub hub: HubId,
    pub spec: IntervalSpec,
    pub counts: Vec<u32>,
}

impl ArrivalSeries {
    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Calendar encoding of an observation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    pub period_of_day: usize,
    pub hour: usize,
    /// 0 = Monday (the first day of every log).
    pub weekday: usize,
}

impl Calendar {
    pub const WIDTH: usize = 9;

    pub fn at(t_o: Minute, interval: Minute) -> Self {
        let in_day = t_o % MINUTES_PER_DAY;
        Self {
            period_of_day: (in_day / interval) as usize,
            hour: (in_day / 60) as usize,
            weekday: ((t_o / MINUTES_PER_DAY) % 7) as usize,
        }
    }

    /// `[period, hour, one-hot weekday (7)]`.
    pub fn encode(&self) -> [f64; Self::WIDTH] {
        let mut out = [0.0; Self::WIDTH];
        out[0] = self.period_of_day as f64;
        out[1] = self.hour as f64;
        out[2 + self.weekday] = 1.0;
        out
    }
}

/// Which arrival population a history feature or training target counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Parcels ordered after the observation time.
    Unordered,
    /// Every arrival.
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Volume from the previous day, observed at `t_o - 1440` (length `T + 1`).
    pub prev_day: Vec<f64>,
    /// Total arrivals per interval over the last four hours.
    pub recent_totals: Vec<f64>,
    pub calendar: Calendar,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.prev_day.len() + self.recent_totals.len() + Calendar::WIDTH
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.prev_day);
        v.extend_from_slice(&self.recent_totals);
        v.extend_from_slice(&self.calendar.encode());
        v
    }
}

/// Position of an in-network parcel at the observation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    AtHub { hub: HubId, since: Minute },
    OnRoute { from: HubId, to: HubId, since: Minute },
}

impl Position {
    pub fn since(&self) -> Minute {
        match *self {
            Position::AtHub { since, .. } | Position::OnRoute { since, .. } => since,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotEntry {
    /// Index into the log's parcel list.
    pub parcel: usize,
    pub parcel_id: u64,
    pub position: Position,
    /// Hubs still to be reached, ending with the target hub. When the parcel
    /// sits at a hub that hub comes first; on a route it starts at the route's
    /// far end.
    pub remaining: Vec<HubId>,
    /// Minutes already spent at the current location.
    pub elapsed: Minute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSnapshot {
    pub t_o: Minute,
    pub target: HubId,
    pub entries: Vec<SnapshotEntry>,
}

impl ObservationSnapshot {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Read-only query facade over a network and its parcel log.
#[derive(Debug, Clone, Copy)]
pub struct DataStore<'a> {
    pub network: &'a Network,
    pub log: &'a ParcelLog,
}

impl<'a> DataStore<'a> {
    pub fn new(network: &'a Network, log: &'a ParcelLog) -> Self {
        Self { network, log }
    }

    /// Indexes the arrivals at `hub` for repeated queries.
    pub fn hub(&self, hub: &str) -> Result<HubView<'a>> {
        Ok(self.hub_by_id(self.network.hub_id(hub)?))
    }

    pub fn hub_by_id(&self, hub: HubId) -> HubView<'a> {
        HubView::new(self.log, hub)
    }

    pub fn snapshot(&self, t_o: Minute, target: &str) -> Result<ObservationSnapshot> {
        self.hub(target)?.snapshot(t_o)
    }
}

/// Arrivals at one hub, sorted by arrival time, plus the parcels routed
/// through it.
#[derive(Debug, Clone)]
pub struct HubView<'a> {
    log: &'a ParcelLog,
    hub: HubId,
    /// `(arrival, order_time)` sorted by arrival.
    arrivals: Vec<(Minute, Minute)>,
    /// `(parcel index, arrival at hub)` for parcels whose path includes the hub,
    /// in order-time order.
    routed: Vec<(usize, Option<Minute>)>,
}

impl<'a> HubView<'a> {
    pub fn new(log: &'a ParcelLog, hub: HubId) -> Self {
        let mut arrivals = Vec::new();
        let mut routed = Vec::new();
        for (i, p) in log.parcels.iter().enumerate() {
            if !p.visits(hub) {
                continue;
            }
            let arrival = p.arrival_at(hub);
            if let Some(a) = arrival {
                arrivals.push((a, p.order_time));
            }
            routed.push((i, arrival));
        }
        arrivals.sort_unstable();
        routed.sort_by_key(|&(i, _)| (log.parcels[i].order_time, i));
        Self { log, hub, arrivals, routed }
    }

    pub fn hub(&self) -> HubId {
        self.hub
    }

    pub fn log(&self) -> &'a ParcelLog {
        self.log
    }

    fn check_window(&self, spec: &IntervalSpec) -> Result<()> {
        if spec.window_end() > self.log.end {
            return Err(Error::Data(format!(
                "window [{}, {}) runs past the end of the log at {}",
                spec.t_o,
                spec.window_end(),
                self.log.end
            )));
        }
        Ok(())
    }

    fn count(&self, spec: &IntervalSpec, keep: impl Fn(Minute) -> bool) -> Vec<u32> {
        let mut counts = vec![0u32; spec.periods()];
        let start = self.arrivals.partition_point(|&(a, _)| a < spec.t_o);
        for &(arrival, order) in &self.arrivals[start..] {
            let Some(t) = spec.period_of(arrival) else { break };
            if keep(order) {
                counts[t] += 1;
            }
        }
        counts
    }

    fn series(&self, spec: &IntervalSpec, counts: Vec<u32>) -> ArrivalSeries {
        ArrivalSeries { hub: self.hub, spec: *spec, counts }
    }

    /// Arrivals at the hub per period.
    pub fn bin_arrivals(&self, spec: &IntervalSpec) -> Result<ArrivalSeries> {
        self.check_window(spec)?;
        Ok(self.series(spec, self.count(spec, |_| true)))
    }

    /// Arrivals of parcels ordered after `spec.t_o`.
    pub fn unordered_target(&self, spec: &IntervalSpec) -> Result<ArrivalSeries> {
        self.check_window(spec)?;
        let t_o = spec.t_o;
        Ok(self.series(spec, self.count(spec, |order| order > t_o)))
    }

    /// Arrivals of parcels already ordered at `spec.t_o`.
    pub fn ordered_arrivals(&self, spec: &IntervalSpec) -> Result<ArrivalSeries> {
        self.check_window(spec)?;
        let t_o = spec.t_o;
        Ok(self.series(spec, self.count(spec, |order| order <= t_o)))
    }

    pub fn target(&self, kind: TargetKind, spec: &IntervalSpec) -> Result<ArrivalSeries> {
        match kind {
            TargetKind::Unordered => self.unordered_target(spec),
            TargetKind::Total => self.bin_arrivals(spec),
        }
    }

    /// Total arrivals per period, `None` for periods not fully inside the log.
    pub fn observable_counts(&self, spec: &IntervalSpec) -> Vec<Option<u32>> {
        let counts = self.count(spec, |_| true);
        counts
            .into_iter()
            .enumerate()
            .map(|(t, c)| {
                let end = spec.t_o + (t as Minute + 1) * spec.interval;
                (end <= self.log.end).then_some(c)
            })
            .collect()
    }

    /// Parcels ordered at or before `t_o` that have not reached the hub by `t_o`.
    pub fn snapshot(&self, t_o: Minute) -> Result<ObservationSnapshot> {
        if t_o > self.log.end {
            return Err(Error::Data(format!(
                "observation time {t_o} is past the end of the log at {}",
                self.log.end
            )));
        }
        let mut entries = Vec::new();
        for &(i, arrival) in &self.routed {
            let parcel = &self.log.parcels[i];
            if parcel.order_time > t_o {
                break;
            }
            if arrival.is_some_and(|a| a <= t_o) {
                continue;
            }
            entries.push(locate(parcel, i, self.hub, t_o)?);
        }
        Ok(ObservationSnapshot { t_o, target: self.hub, entries })
    }

    /// Feature vector for a forecast issued at `t_o`.
    pub fn build_features(&self, kind: TargetKind, spec: &IntervalSpec) -> Result<FeatureVector> {
        let t_o = spec.t_o;
        if t_o < MIN_HISTORY_MINUTES {
            return Err(Error::ColdStart(format!(
                "features at minute {t_o} need {MIN_HISTORY_MINUTES} minutes of history"
            )));
        }
        if spec.periods() as Minute * spec.interval > MINUTES_PER_DAY {
            return Err(Error::Config("previous-day feature needs a horizon of at most one day".into()));
        }
        if RECENT_WINDOW_MINUTES % spec.interval != 0 {
            return Err(Error::Config(format!(
                "interval {} does not divide the {RECENT_WINDOW_MINUTES}-minute recent window",
                spec.interval
            )));
        }
        let prev_day = self.target(kind, &spec.at(t_o - MINUTES_PER_DAY))?.as_f64();
        let recent_spec = IntervalSpec {
            interval: spec.interval,
            last_index: (RECENT_WINDOW_MINUTES / spec.interval) as usize - 1,
            t_o: t_o - RECENT_WINDOW_MINUTES,
        };
        let recent_totals = self.bin_arrivals(&recent_spec)?.as_f64();
        Ok(FeatureVector { prev_day, recent_totals, calendar: Calendar::at(t_o, spec.interval) })
    }

    pub fn build_unordered_features(&self, spec: &IntervalSpec) -> Result<FeatureVector> {
        self.build_features(TargetKind::Unordered, spec)
    }
}

fn locate(parcel: &ParcelRecord, index: usize, target: HubId, t_o: Minute) -> Result<SnapshotEntry> {
    let integrity = || Error::Data(format!("parcel {} has no event covering minute {t_o}", parcel.parcel_id));
    let event = parcel.events.iter().rev().find(|e| e.arrival <= t_o).ok_or_else(integrity)?;
    let target_pos = parcel.path.iter().position(|&h| h == target).ok_or_else(integrity)?;
    let (position, next_hub) = match event.location {
        Location::Hub(hub) => (Position::AtHub { hub, since: event.arrival }, hub),
        Location::Route(from, to) => (Position::OnRoute { from, to, since: event.arrival }, to),
    };
    let from = parcel.path.iter().position(|&h| h == next_hub).ok_or_else(integrity)?;
    if from > target_pos {
        return Err(integrity());
    }
    Ok(SnapshotEntry {
        parcel: index,
        parcel_id: parcel.parcel_id,
        position,
        remaining: parcel.path[from..=target_pos].to_vec(),
        elapsed: t_o - event.arrival,
    })
}

/// Writes `(t_o, features)` rows as comma-separated text with a header row.
pub fn write_feature_matrix<W: Write>(rows: &[(Minute, FeatureVector)], mut out: W) -> Result<()> {
    let Some((_, first)) = rows.first() else {
        writeln!(out, "t_o")?;
        return Ok(());
    };
    let mut header = vec!["t_o".to_string()];
    header.extend((0..first.prev_day.len()).map(|i| format!("prev_{i}")));
    header.extend((0..first.recent_totals.len()).map(|i| format!("recent_{i}")));
    header.extend(["period".to_string(), "hour".to_string()]);
    header.extend((0..7).map(|i| format!("weekday_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (t_o, fv) in rows {
        let values: Vec<String> = fv.to_vec().iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{t_o},{}", values.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::{build_network, Event, NetworkSpec};

    fn network() -> Network {
        build_network(&NetworkSpec::demo()).unwrap()
    }

    /// A parcel AH1 -> LH1 -> GH1 -> LH3 -> AH7 with the given stay boundaries.
    fn parcel(net: &Network, id: u64, order: Minute, marks: &[Minute]) -> ParcelRecord {
        let names = ["AH1", "LH1", "GH1", "LH3", "AH7"];
        let path: Vec<HubId> = names.iter().map(|n| net.hub_id(n).unwrap()).collect();
        let mut events = Vec::new();
        let mut t = order;
        for (k, &m) in marks.iter().enumerate() {
            let location = if k % 2 == 0 {
                Location::Hub(path[k / 2])
            } else {
                Location::Route(path[k / 2], path[k / 2 + 1])
            };
            events.push(Event { location, arrival: t, departure: Some(m) });
            t = m;
        }
        ParcelRecord { parcel_id: id, order_time: order, origin: path[0], destination: path[4], path, events }
    }

    /// A parcel that reaches GH1 at exactly `arrival`.
    fn arriving(net: &Network, id: u64, order: Minute, arrival: Minute) -> ParcelRecord {
        assert!(arrival >= order + 4);
        let step = (arrival - order) / 4;
        let m = [order + step, order + 2 * step, order + 3 * step, arrival, arrival + 10];
        parcel(net, id, order, &m)
    }

    #[test]
    fn boundary_arrival_goes_to_later_bin() {
        let net = network();
        let gh = net.hub_id("GH1").unwrap();
        // Orders well before zero are impossible, so shift the window instead.
        let log = ParcelLog::new(
            vec![
                arriving(&net, 1, 0, 100),
                arriving(&net, 2, 0, 114),
                arriving(&net, 3, 0, 115),
            ],
            1000,
        );
        let view = HubView::new(&log, gh);
        let spec = IntervalSpec::new(15, 3, 100).unwrap();
        assert_eq!(view.bin_arrivals(&spec).unwrap().counts, [2, 1, 0, 0]);
    }

    #[test]
    fn empty_log_gives_zeros() {
        let net = network();
        let log = ParcelLog::new(Vec::new(), 2000);
        let view = DataStore::new(&net, &log).hub("GH1").unwrap();
        let spec = IntervalSpec::day_ahead(0);
        assert_eq!(view.bin_arrivals(&spec).unwrap().counts, vec![0; 96]);
        assert!(view.snapshot(0).unwrap().is_empty());
    }

    #[test]
    fn unknown_hub_is_a_lookup_error() {
        let net = network();
        let log = ParcelLog::new(Vec::new(), 2000);
        let err = DataStore::new(&net, &log).hub("XX1").unwrap_err();
        assert!(matches!(err, Error::UnknownHub(_)));
    }

    #[test]
    fn window_past_log_end_is_rejected() {
        let net = network();
        let log = ParcelLog::new(Vec::new(), 1000);
        let view = DataStore::new(&net, &log).hub("GH1").unwrap();
        assert!(view.bin_arrivals(&IntervalSpec::day_ahead(0)).is_err());
        let observable = view.observable_counts(&IntervalSpec::new(15, 95, 900).unwrap());
        assert_eq!(observable.iter().filter(|c| c.is_some()).count(), 6);
    }

    #[test]
    fn order_at_observation_time_is_ordered() {
        let net = network();
        let gh = net.hub_id("GH1").unwrap();
        let log = ParcelLog::new(
            vec![arriving(&net, 1, 60, 200), arriving(&net, 2, 61, 210)],
            2000,
        );
        let view = HubView::new(&log, gh);
        let spec = IntervalSpec::new(15, 20, 60).unwrap();
        let unordered = view.unordered_target(&spec).unwrap();
        assert_eq!(unordered.total(), 1);
        assert_eq!(view.ordered_arrivals(&spec).unwrap().total(), 1);
        let snap = view.snapshot(60).unwrap();
        assert_eq!(snap.entries.iter().map(|e| e.parcel_id).collect::<Vec<_>>(), [1]);

        // Everything ordered before t_o: no unordered arrivals.
        let late = spec.at(100);
        assert_eq!(view.unordered_target(&late).unwrap().total(), 0);
    }

    #[test]
    fn snapshot_positions() {
        let net = network();
        let id = |n| net.hub_id(n).unwrap();
        // AH1 [0,20) route [20,50) LH1 [50,80) route [80,110) GH1 [110, 150)
        let log = ParcelLog::new(vec![parcel(&net, 9, 0, &[20, 50, 80, 110, 150])], 2000);
        let view = HubView::new(&log, id("GH1"));

        let snap = view.snapshot(30).unwrap();
        let e = &snap.entries[0];
        assert_eq!(e.position, Position::OnRoute { from: id("AH1"), to: id("LH1"), since: 20 });
        assert_eq!(e.remaining, [id("LH1"), id("GH1")]);
        assert_eq!(e.elapsed, 10);

        let e = &view.snapshot(50).unwrap().entries[0];
        assert_eq!(e.position, Position::AtHub { hub: id("LH1"), since: 50 });
        assert_eq!(e.remaining, [id("LH1"), id("GH1")]);
        assert_eq!(e.elapsed, 0);

        assert_eq!(view.snapshot(109).unwrap().len(), 1);
        assert!(view.snapshot(110).unwrap().is_empty());

        // A parcel that never visits the target is simply absent.
        let off_path = HubView::new(&log, id("LH2"));
        assert!(off_path.snapshot(30).unwrap().is_empty());
    }

    #[test]
    fn features_shapes_and_cold_start() {
        let net = network();
        let log = ParcelLog::new(Vec::new(), 5 * MINUTES_PER_DAY);
        let view = DataStore::new(&net, &log).hub("GH1").unwrap();
        let fv = view.build_unordered_features(&IntervalSpec::day_ahead(2 * MINUTES_PER_DAY)).unwrap();
        assert_eq!(fv.prev_day.len(), 96);
        assert_eq!(fv.recent_totals.len(), 16);
        assert!(fv.recent_totals.iter().all(|&v| v == 0.0));
        assert_eq!(fv.to_vec().len(), 96 + 16 + Calendar::WIDTH);

        let err = view.build_unordered_features(&IntervalSpec::day_ahead(60)).unwrap_err();
        assert!(matches!(err, Error::ColdStart(_)));
    }

    #[test]
    fn calendar_encoding() {
        // Day 9 is a Wednesday; 16:30 is period 66 at I = 15.
        let cal = Calendar::at(9 * MINUTES_PER_DAY + 16 * 60 + 30, 15);
        assert_eq!(cal, Calendar { period_of_day: 66, hour: 16, weekday: 2 });
        assert_eq!(cal.encode(), [66.0, 16.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn feature_matrix_has_header() {
        let fv = FeatureVector {
            prev_day: vec![1.0, 2.0],
            recent_totals: vec![3.0],
            calendar: Calendar { period_of_day: 1, hour: 0, weekday: 6 },
        };
        let mut out = Vec::new();
        write_feature_matrix(&[(15, fv)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t_o,prev_0,prev_1,recent_0,period,hour,weekday_0,weekday_1,weekday_2,weekday_3,weekday_4,weekday_5,weekday_6"
        );
        assert_eq!(lines.next().unwrap(), "15,1,2,3,1,0,0,0,0,0,0,0,1");
    }
}
