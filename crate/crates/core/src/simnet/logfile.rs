//! Line-oriented event log format.
//!
//! ```text
//! #hubcast-log v1 end=43200
//! parcel_id,order_time,origin,destination,path,events
//! 17,412,AH1,AH8,AH1|LH1|GH1|LH3|AH8,[AH1,412,437];[AH1-LH1,437,455];...
//! ```
//!
//! `end` is the first minute not covered by the log. Events are
//! `[location,arrival,departure]` separated by `;`, where a location is a hub
//! id or `FROM-TO` for a route, and an empty departure marks a stay that was
//! still open when the log ended.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::network::{HubId, Network};
use super::record::{Event, Location, ParcelRecord};
use crate::{Error, Minute, Result};

pub const LOG_VERSION: &str = "#hubcast-log v1";
const COLUMNS: &str = "parcel_id,order_time,origin,destination,path,events";

/// A parcel log together with the end of its observation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParcelLog {
    pub end: Minute,
    pub parcels: Vec<ParcelRecord>,
}

impl ParcelLog {
    pub fn new(parcels: Vec<ParcelRecord>, end: Minute) -> Self {
        Self { end, parcels }
    }

    pub fn write<W: Write>(&self, network: &Network, mut out: W) -> Result<()> {
        writeln!(out, "{LOG_VERSION} end={}", self.end)?;
        writeln!(out, "{COLUMNS}")?;
        let mut line = String::new();
        for p in &self.parcels {
            line.clear();
            let _ = write!(
                line,
                "{},{},{},{},",
                p.parcel_id,
                p.order_time,
                network.name(p.origin),
                network.name(p.destination)
            );
            for (i, &h) in p.path.iter().enumerate() {
                if i > 0 {
                    line.push('|');
                }
                line.push_str(network.name(h));
            }
            line.push(',');
            for (i, e) in p.events.iter().enumerate() {
                if i > 0 {
                    line.push(';');
                }
                match e.location {
                    Location::Hub(h) => {
                        let _ = write!(line, "[{},{},", network.name(h), e.arrival);
                    }
                    Location::Route(a, b) => {
                        let _ = write!(line, "[{}-{},{},", network.name(a), network.name(b), e.arrival);
                    }
                }
                if let Some(d) = e.departure {
                    let _ = write!(line, "{d}");
                }
                line.push(']');
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(network: &Network, input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::Parse { line: 1, msg: "empty log".into() }),
        };
        let end = header
            .strip_prefix(LOG_VERSION)
            .and_then(|rest| rest.trim().strip_prefix("end="))
            .and_then(|v| v.parse::<Minute>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("expected `{LOG_VERSION} end=<minute>` header"),
            })?;
        let columns = lines.next().map(|(_, line)| line).transpose()?;
        if columns.as_deref() != Some(COLUMNS) {
            return Err(Error::Parse { line: 2, msg: "missing column header".into() });
        }
        let mut parcels = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let record = parse_record(network, &line).map_err(|msg| Error::Parse { line: i + 1, msg })?;
            parcels.push(record);
        }
        Ok(Self { end, parcels })
    }
}

fn parse_record(network: &Network, line: &str) -> Result<ParcelRecord, String> {
    let mut fields = line.splitn(6, ',');
    let mut next = |name: &str| fields.next().ok_or_else(|| format!("missing field `{name}`"));
    let parcel_id = next("parcel_id")?.parse::<u64>().map_err(|e| format!("parcel_id: {e}"))?;
    let order_time = next("order_time")?.parse::<Minute>().map_err(|e| format!("order_time: {e}"))?;
    let hub = |name: &str| network.hub_id(name).map_err(|e| e.to_string());
    let origin = hub(next("origin")?)?;
    let destination = hub(next("destination")?)?;
    let path = next("path")?.split('|').map(hub).collect::<Result<Vec<HubId>, _>>()?;
    let events_field = next("events")?;
    let mut events = Vec::new();
    for raw in events_field.split(';').filter(|s| !s.is_empty()) {
        let body = raw
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| format!("malformed event `{raw}`"))?;
        let mut parts = body.split(',');
        let (Some(loc), Some(arr), Some(dep), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(format!("malformed event `{raw}`"));
        };
        let location = match loc.split_once('-') {
            Some((a, b)) => Location::Route(hub(a)?, hub(b)?),
            None => Location::Hub(hub(loc)?),
        };
        let arrival = arr.parse::<Minute>().map_err(|e| format!("event arrival: {e}"))?;
        let departure = if dep.is_empty() {
            None
        } else {
            Some(dep.parse::<Minute>().map_err(|e| format!("event departure: {e}"))?)
        };
        events.push(Event { location, arrival, departure });
    }
    let record = ParcelRecord { parcel_id, order_time, origin, destination, path, events };
    record.check()?;
    Ok(record)
}
