//! Hub network model and synthetic parcel traffic generator.

mod config;
mod logfile;
mod network;
mod record;
mod simulate;

pub use config::{DemandProfile, DwellProfile, GammaDwell, PairRate, SimConfig, TravelNoise};
pub use logfile::{ParcelLog, LOG_VERSION};
pub use network::{build_network, Hub, HubId, HubKind, HubSpec, LinkSpec, Network, NetworkSpec, Route};
pub use record::{Event, Location, ParcelRecord};
pub use simulate::{poisson_quantile, simulate};
