//! Destination shares of the unordered volume.
//!
//! For each forecast period the state holds the fraction of not-yet-ordered
//! arrivals bound for each destination hub. Shares start as historical ratios
//! and are blended with each new observation by exponential smoothing.

use std::io::Write;

use crate::datastore::IntervalSpec;
use crate::simnet::{HubId, Network, ParcelLog};
use crate::{Error, Minute, Result};

/// Which term of the blend the smoothing constant weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaConvention {
    /// `d <- (1 - alpha) d + alpha rho`
    #[default]
    NewObservation,
    /// `d <- alpha d + (1 - alpha) rho`
    Prior,
}

pub const DEFAULT_ALPHA: f64 = 0.3;

/// Per-period, per-destination counts observed at one observation time.
pub type DestinationCounts = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct DestShareState {
    pub destinations: Vec<HubId>,
    /// `shares[t][j]`, each row summing to one.
    pub shares: Vec<Vec<f64>>,
    pub alpha: f64,
    pub convention: AlphaConvention,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("smoothing constant {alpha} is outside [0, 1]")));
    }
    Ok(())
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        row.iter_mut().for_each(|v| *v /= s);
    }
}

fn check_shape(counts: &[Vec<f64>], periods: usize, width: usize) -> Result<()> {
    if counts.len() != periods || counts.iter().any(|r| r.len() != width) {
        return Err(Error::Shape(format!("expected {periods} periods of {width} destination counts")));
    }
    if counts.iter().flatten().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(Error::Data("destination counts must be finite and non-negative".into()));
    }
    Ok(())
}

/// Shares from the pooled counts of `history`. Periods without any volume
/// start uniform.
pub fn initialize_shares(
    destinations: &[HubId],
    history: &[DestinationCounts],
    alpha: f64,
    convention: AlphaConvention,
) -> Result<DestShareState> {
    if destinations.is_empty() {
        return Err(Error::Config("no destination hubs".into()));
    }
    check_alpha(alpha)?;
    let Some(first) = history.first() else {
        return Err(Error::Data("no history to initialize destination shares".into()));
    };
    let (periods, width) = (first.len(), destinations.len());
    let mut totals = vec![vec![0.0; width]; periods];
    for obs in history {
        check_shape(obs, periods, width)?;
        for (acc, row) in totals.iter_mut().zip(obs) {
            acc.iter_mut().zip(row).for_each(|(a, c)| *a += c);
        }
    }
    let shares = totals
        .into_iter()
        .map(|row| {
            let m: f64 = row.iter().sum();
            if m > 0.0 {
                row.iter().map(|c| c / m).collect()
            } else {
                vec![1.0 / width as f64; width]
            }
        })
        .collect();
    Ok(DestShareState { destinations: destinations.to_vec(), shares, alpha, convention })
}

impl DestShareState {
    pub fn periods(&self) -> usize {
        self.shares.len()
    }

    /// Blends in one observation. Periods with no volume keep their shares.
    pub fn update(&mut self, obs: &[Vec<f64>]) -> Result<()> {
        check_alpha(self.alpha)?;
        check_shape(obs, self.periods(), self.destinations.len())?;
        let (keep, take) = match self.convention {
            AlphaConvention::NewObservation => (1.0 - self.alpha, self.alpha),
            AlphaConvention::Prior => (self.alpha, 1.0 - self.alpha),
        };
        for (row, counts) in self.shares.iter_mut().zip(obs) {
            let m: f64 = counts.iter().sum();
            if m == 0.0 {
                continue;
            }
            for (d, c) in row.iter_mut().zip(counts) {
                let rho = c / m;
                *d = if take == 0.0 {
                    *d
                } else if keep == 0.0 {
                    rho
                } else {
                    keep * *d + take * rho
                };
            }
            normalize(row);
        }
        Ok(())
    }

    /// Splits each period's volume across destinations.
    pub fn allocate(&self, u_hat: &[f64]) -> Result<Vec<Vec<f64>>> {
        if u_hat.len() != self.periods() {
            return Err(Error::Shape(format!("{} volumes for {} periods", u_hat.len(), self.periods())));
        }
        Ok(u_hat.iter().zip(&self.shares).map(|(u, row)| row.iter().map(|d| u * d).collect()).collect())
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.shares.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Writes the share matrix: one row per period, one column per destination.
    pub fn export<W: Write>(&self, network: &Network, mut out: W) -> Result<()> {
        write!(out, "period")?;
        for &d in &self.destinations {
            write!(out, ",{}", network.name(d))?;
        }
        writeln!(out)?;
        for (t, row) in self.shares.iter().enumerate() {
            write!(out, "{t}")?;
            for v in row {
                write!(out, ",{v:.12}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Functional form of [`DestShareState::update`] with an explicit constant.
pub fn update_shares(state: &DestShareState, obs: &[Vec<f64>], alpha: f64) -> Result<DestShareState> {
    check_alpha(alpha)?;
    let mut next = DestShareState { alpha, ..state.clone() };
    next.update(obs)?;
    Ok(next)
}

/// Unordered arrivals at one hub, broken down by parcel destination.
#[derive(Debug, Clone)]
pub struct DestinationView {
    pub destinations: Vec<HubId>,
    /// `(arrival, order_time, destination index)` sorted by arrival.
    arrivals: Vec<(Minute, Minute, usize)>,
    end: Minute,
}

impl DestinationView {
    /// Destinations are the network's access hubs.
    pub fn new(network: &Network, log: &ParcelLog, hub: HubId) -> Self {
        let destinations: Vec<HubId> = network.access_hubs().collect();
        let mut arrivals: Vec<(Minute, Minute, usize)> = log
            .parcels
            .iter()
            .filter_map(|p| {
                let j = destinations.iter().position(|&d| d == p.destination)?;
                Some((p.arrival_at(hub)?, p.order_time, j))
            })
            .collect();
        arrivals.sort_unstable();
        Self { destinations, arrivals, end: log.end }
    }

    /// Counts of parcels ordered after `spec.t_o` arriving in each period.
    pub fn unordered_counts(&self, spec: &IntervalSpec) -> Result<DestinationCounts> {
        if spec.window_end() > self.end {
            return Err(Error::Data(format!("window ending at {} runs past the log", spec.window_end())));
        }
        let mut counts = vec![vec![0.0; self.destinations.len()]; spec.periods()];
        let start = self.arrivals.partition_point(|a| a.0 < spec.t_o);
        for &(arrival, order, j) in &self.arrivals[start..] {
            let Some(t) = spec.period_of(arrival) else { break };
            if order > spec.t_o {
                counts[t][j] += 1.0;
            }
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u16) -> Vec<HubId> {
        (0..n).map(HubId).collect()
    }

    #[test]
    fn initial_shares_are_ratios() {
        let s = initialize_shares(&ids(2), &[vec![vec![3.0, 1.0], vec![0.0, 0.0]]], 0.3, Default::default()).unwrap();
        assert_eq!(s.shares[0], vec![0.75, 0.25]);
        assert_eq!(s.shares[1], vec![0.5, 0.5]);
        let one = initialize_shares(&ids(1), &[vec![vec![4.0], vec![0.0]]], 0.3, Default::default()).unwrap();
        assert_eq!(one.shares, vec![vec![1.0], vec![1.0]]);
        assert!(matches!(initialize_shares(&[], &[], 0.3, Default::default()), Err(Error::Config(_))));
    }

    #[test]
    fn update_blends_toward_observation() {
        let s = initialize_shares(&ids(2), &[vec![vec![3.0, 1.0]]], 0.5, Default::default()).unwrap();
        let n = update_shares(&s, &[vec![5.0, 5.0]], 0.5).unwrap();
        assert_eq!(n.shares[0], vec![0.625, 0.375]);
        assert_eq!(update_shares(&s, &[vec![5.0, 5.0]], 0.0).unwrap().shares, s.shares);
        assert_eq!(update_shares(&s, &[vec![1.0, 4.0]], 1.0).unwrap().shares[0], vec![0.2, 0.8]);
        assert!(matches!(update_shares(&s, &[vec![1.0, 4.0]], 1.5), Err(Error::Config(_))));
        assert!(matches!(update_shares(&s, &[vec![1.0]], 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn prior_convention_swaps_weights() {
        let mut s = initialize_shares(&ids(2), &[vec![vec![3.0, 1.0]]], 0.8, AlphaConvention::Prior).unwrap();
        s.update(&[vec![0.0, 2.0]]).unwrap();
        assert!((s.shares[0][0] - 0.6).abs() < 1e-15);
        assert!((s.shares[0][1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_period_keeps_shares() {
        let mut s = initialize_shares(&ids(3), &[vec![vec![1.0, 2.0, 1.0]]], 0.4, Default::default()).unwrap();
        let before = s.clone();
        s.update(&[vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn allocation_splits_volume() {
        let s = initialize_shares(&ids(2), &[vec![vec![3.0, 1.0], vec![1.0, 1.0]]], 0.3, Default::default()).unwrap();
        let a = s.allocate(&[10.0, 0.0]).unwrap();
        assert_eq!(a, vec![vec![7.5, 2.5], vec![0.0, 0.0]]);
        assert!(matches!(s.allocate(&[1.0]), Err(Error::Shape(_))));
    }
}
