use super::network::HubId;
use crate::Minute;

/// Where an event took place: inside a hub, or on the route between two hubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Hub(HubId),
    Route(HubId, HubId),
}

/// One stay at a location. For hubs `arrival..departure` is the dwell; for
/// routes it is the travel leg. `departure` is `None` when the stay had not
/// ended by the close of the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub location: Location,
    pub arrival: Minute,
    pub departure: Option<Minute>,
}

impl Event {
    pub fn duration(&self) -> Option<Minute> {
        self.departure.map(|d| d - self.arrival)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParcelRecord {
    pub parcel_id: u64,
    pub order_time: Minute,
    pub origin: HubId,
    pub destination: HubId,
    pub path: Vec<HubId>,
    /// Alternating hub and route events following `path`, possibly cut short
    /// at the end of the log.
    pub events: Vec<Event>,
}

impl ParcelRecord {
    /// True when the parcel left its destination hub before the log ended.
    pub fn is_complete(&self) -> bool {
        self.events.len() == 2 * self.path.len() - 1
            && self.events.last().is_some_and(|e| e.departure.is_some())
    }

    /// Arrival time at `hub`, if the parcel reached it within the log.
    pub fn arrival_at(&self, hub: HubId) -> Option<Minute> {
        self.events
            .iter()
            .find(|e| e.location == Location::Hub(hub))
            .map(|e| e.arrival)
    }

    pub fn visits(&self, hub: HubId) -> bool {
        self.path.contains(&hub)
    }

    /// Checks the structural invariants of a record: events strictly ordered
    /// in time, following the path hop by hop, with contiguous stays.
    pub fn check(&self) -> Result<(), String> {
        if self.path.first() != Some(&self.origin) || self.path.last() != Some(&self.destination) {
            return Err(format!("parcel {}: path endpoints disagree with origin/destination", self.parcel_id));
        }
        let Some(first) = self.events.first() else {
            return Err(format!("parcel {}: no events", self.parcel_id));
        };
        if first.arrival < self.order_time {
            return Err(format!("parcel {}: first event before order time", self.parcel_id));
        }
        let expected = self.path.iter().enumerate().flat_map(|(i, &h)| {
            let hop = self.path.get(i + 1).map(|&n| Location::Route(h, n));
            std::iter::once(Location::Hub(h)).chain(hop)
        });
        for (k, (event, loc)) in self.events.iter().zip(expected).enumerate() {
            if event.location != loc {
                return Err(format!("parcel {}: event {k} is off the planned path", self.parcel_id));
            }
            match event.departure {
                Some(dep) if dep <= event.arrival => {
                    return Err(format!("parcel {}: event {k} has non-positive duration", self.parcel_id));
                }
                None if k + 1 != self.events.len() => {
                    return Err(format!("parcel {}: open event {k} is not the last", self.parcel_id));
                }
                _ => {}
            }
            if let Some(next) = self.events.get(k + 1) {
                if Some(next.arrival) != event.departure {
                    return Err(format!("parcel {}: gap after event {k}", self.parcel_id));
                }
            }
        }
        if self.events.len() > 2 * self.path.len() - 1 {
            return Err(format!("parcel {}: more events than the path allows", self.parcel_id));
        }
        Ok(())
    }
}
