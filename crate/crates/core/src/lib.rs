//! Parcel arrival forecasting for logistics hubs.
//!
//! The crate splits the arrival volume at a target hub into two populations
//! relative to an observation time `t_o`:
//!
//! * parcels not yet ordered at `t_o`, forecast from historical patterns by a
//!   feed-forward network ([`unordered`]), and
//! * parcels already travelling through the network, whose arrival times are
//!   predicted from random-forest travel and dwell estimates ([`ordered`]).
//!
//! The two forecasts are merged by [`ensemble`], compared against
//! [`baselines`] and scored by [`eval`]. [`simnet`] provides the synthetic
//! hub network and event log everything else runs on, and [`pipeline`] ties
//! the stages together.

pub mod ann;
pub mod baselines;
pub mod datastore;
pub mod destshare;
pub mod ensemble;
mod error;
pub mod eval;
pub mod forest;
pub mod ordered;
pub mod pipeline;
pub mod simnet;
pub mod unordered;

pub use error::{Error, ErrorKind, Result};

/// Timestamps are whole minutes since the start of the simulated log.
pub type Minute = u32;

pub const MINUTES_PER_DAY: Minute = 1440;
