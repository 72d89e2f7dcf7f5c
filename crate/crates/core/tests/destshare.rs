mod common;

use hubcast::datastore::IntervalSpec;
use hubcast::destshare::{
    initialize_shares, update_shares, AlphaConvention, DestShareState, DestinationView, DEFAULT_ALPHA,
};
use hubcast::pipeline::{destination_shares, RunConfig};
use hubcast::simnet::HubId;
use hubcast::MINUTES_PER_DAY;
use proptest::prelude::*;

fn row_ok(state: &DestShareState) -> bool {
    state.shares.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && r.iter().all(|&d| (0.0..=1.0).contains(&d)))
}

#[test]
fn unordered_tallies_match_a_log_scan() {
    let (net, log) = common::demo();
    let gh1 = net.hub_id("GH1").unwrap();
    let view = DestinationView::new(net, log, gh1);
    assert_eq!(view.destinations, net.access_hubs().collect::<Vec<_>>());
    for t_o in [3 * MINUTES_PER_DAY, 10 * MINUTES_PER_DAY + 435, 27 * MINUTES_PER_DAY + 1200] {
        let spec = IntervalSpec::day_ahead(t_o);
        let got = view.unordered_counts(&spec).unwrap();
        let mut want = vec![vec![0.0; view.destinations.len()]; 96];
        for p in &log.parcels {
            let Some(a) = p.arrival_at(gh1) else { continue };
            if p.order_time <= t_o || a < t_o || a >= t_o + 1440 {
                continue;
            }
            let j = view.destinations.iter().position(|&d| d == p.destination).unwrap();
            want[((a - t_o) / 15) as usize][j] += 1.0;
        }
        assert_eq!(got, want, "t_o {t_o}");
    }
}

#[test]
fn rows_stay_normalized_through_a_full_replay() {
    let (net, log) = common::demo();
    let gh1 = net.hub_id("GH1").unwrap();
    let view = DestinationView::new(net, log, gh1);
    let template = IntervalSpec::day_ahead(0);
    let history: Vec<_> = (2..5).map(|d| view.unordered_counts(&template.at(d * MINUTES_PER_DAY)).unwrap()).collect();
    for convention in [AlphaConvention::NewObservation, AlphaConvention::Prior] {
        let mut state = initialize_shares(&view.destinations, &history, DEFAULT_ALPHA, convention).unwrap();
        assert!(row_ok(&state));
        let mut updates = 0;
        for k in 0..(28 * 96) {
            state.update(&view.unordered_counts(&template.at(k * 15)).unwrap()).unwrap();
            assert!(row_ok(&state), "after update at {}", k * 15);
            updates += 1;
        }
        assert_eq!(updates, 2688);
    }

    let cfg = RunConfig::standard("GH1", 30, 7).unwrap();
    let run = destination_shares(net, log, &cfg, DEFAULT_ALPHA, AlphaConvention::NewObservation, None).unwrap();
    assert_eq!(run.updates, 3 * 96);
    assert!(run.max_row_error <= 1e-9);
    assert!(run.allocations.is_empty());
}

fn counts(periods: usize, width: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0.0, 0.0, 1.0, 2.0, 5.0, 13.0]), width), periods)
}

fn state_and_obs() -> impl Strategy<Value = (DestShareState, Vec<Vec<f64>>)> {
    (1usize..6, 1usize..5).prop_flat_map(|(periods, width)| {
        (counts(periods, width), counts(periods, width), prop::bool::ANY).prop_map(move |(h, obs, prior)| {
            let dests: Vec<HubId> = (0..width as u16).map(HubId).collect();
            let conv = if prior { AlphaConvention::Prior } else { AlphaConvention::NewObservation };
            (initialize_shares(&dests, &[h], 0.5, conv).unwrap(), obs)
        })
    })
}

proptest! {
    #[test]
    fn zero_and_one_are_fixed_point_and_replacement((state, obs) in state_and_obs()) {
        let state = DestShareState { convention: AlphaConvention::NewObservation, ..state };
        prop_assert_eq!(&update_shares(&state, &obs, 0.0).unwrap().shares, &state.shares);
        let replaced = update_shares(&state, &obs, 1.0).unwrap();
        for (t, row) in obs.iter().enumerate() {
            let m: f64 = row.iter().sum();
            let want: Vec<f64> = if m == 0.0 { state.shares[t].clone() } else { row.iter().map(|c| c / m).collect() };
            prop_assert_eq!(&replaced.shares[t], &want);
        }
    }

    #[test]
    fn prior_convention_mirrors_the_constant((state, obs) in state_and_obs(), alpha in 0.0f64..=1.0) {
        let prior = DestShareState { convention: AlphaConvention::Prior, ..state.clone() };
        let obs_conv = DestShareState { convention: AlphaConvention::NewObservation, ..state };
        let a = update_shares(&prior, &obs, alpha).unwrap();
        let b = update_shares(&obs_conv, &obs, 1.0 - alpha).unwrap();
        for (ra, rb) in a.shares.iter().zip(&b.shares) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn updates_keep_rows_normalized((state, obs) in state_and_obs(), alpha in 0.0f64..=1.0) {
        prop_assert!(row_ok(&state));
        prop_assert!(row_ok(&update_shares(&state, &obs, alpha).unwrap()));
    }

    #[test]
    fn allocation_conserves_volume((state, _) in state_and_obs(), scale in 0.0f64..500.0) {
        let u: Vec<f64> = (0..state.periods()).map(|t| scale * (t as f64 + 0.5)).collect();
        let alloc = state.allocate(&u).unwrap();
        for (row, total) in alloc.iter().zip(&u) {
            prop_assert!((row.iter().sum::<f64>() - total).abs() <= 1e-9 * total.max(1.0));
        }
    }
}
