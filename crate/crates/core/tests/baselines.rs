mod common;

use hubcast::baselines::{grid_search, hw_forecast, hw_init, hw_step, naive_forecast, HoltWintersState, Smoothing};
use hubcast::datastore::{HubView, IntervalSpec};
use hubcast::MINUTES_PER_DAY;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn two_step_hand_recursion() {
    let p = Smoothing { alpha: 0.5, beta: 0.1, gamma: 0.2 };
    let s0 = HoltWintersState { level: 10.0, trend: 1.0, seasonals: vec![2.0, -1.0, -1.0], params: p, pos: 0 };
    let s1 = hw_step(&s0, 13.0);
    assert!((s1.level - 11.0).abs() < 1e-12);
    assert!((s1.trend - 1.0).abs() < 1e-12);
    assert!((s1.seasonals[0] - 2.0).abs() < 1e-12);
    let s2 = hw_step(&s1, 9.0);
    assert!((s2.level - 11.0).abs() < 1e-12);
    assert!((s2.trend - 0.9).abs() < 1e-12);
    assert!((s2.seasonals[1] + 1.2).abs() < 1e-12);
    assert!((hw_forecast(&s2, 1).unwrap() - 10.9).abs() < 1e-12);
}

#[test]
fn zero_trend_and_seasonal_constants_reduce_to_simple_smoothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let alpha = rng.random_range(0.0..=1.0);
        let m = rng.random_range(1..12);
        let n = rng.random_range(5..200);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..150.0)).collect();
        let mut state = HoltWintersState {
            level: ys[0],
            trend: 0.0,
            seasonals: vec![0.0; m],
            params: Smoothing { alpha, beta: 0.0, gamma: 0.0 },
            pos: 0,
        };
        let mut ses = ys[0];
        for &y in &ys {
            state = hw_step(&state, y);
            ses = alpha * y + (1.0 - alpha) * ses;
            assert!((state.level - ses).abs() <= 1e-12 * ses.abs().max(1.0), "case {case}");
            assert_eq!(state.trend, 0.0);
            assert!(state.seasonals.iter().all(|&s| s == 0.0));
            assert!((hw_forecast(&state, 7).unwrap() - ses).abs() <= 1e-12 * ses.abs().max(1.0));
        }
    }
}

proptest! {
    #[test]
    fn init_matches_two_season_averages(m in 1usize..10, extra in 0usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<f64> = (0..2 * m + extra).map(|_| rng.random_range(0.0..100.0)).collect();
        let s = hw_init(&h, m, Smoothing { alpha: 0.3, beta: 0.3, gamma: 0.3 }).unwrap();
        let a: f64 = h[..m].iter().sum::<f64>() / m as f64;
        let b: f64 = h[m..2 * m].iter().sum::<f64>() / m as f64;
        prop_assert!((s.level - a).abs() < 1e-9);
        prop_assert!((s.trend - (b - a) / m as f64).abs() < 1e-9);
        for k in 0..m {
            prop_assert!((s.seasonals[k] - (h[k] - a + h[m + k] - b) / 2.0).abs() < 1e-9);
        }
        prop_assert!(s.seasonals.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn forecast_is_affine_modulo_season(
        level in -100.0f64..100.0, trend in -5.0f64..5.0,
        seasonals in prop::collection::vec(-10.0f64..10.0, 1..8), pos in 0usize..8, h in 1usize..50,
    ) {
        let m = seasonals.len();
        let s = HoltWintersState { level, trend, seasonals, params: Smoothing { alpha: 0.1, beta: 0.1, gamma: 0.1 }, pos: pos % m };
        let d = hw_forecast(&s, h + m).unwrap() - hw_forecast(&s, h).unwrap();
        prop_assert!((d - m as f64 * trend).abs() < 1e-9);
    }
}

#[test]
fn naive_forecast_is_the_previous_day() {
    let (net, log) = common::demo();
    for hub in ["GH1", "LH1", "AH4"] {
        let view = HubView::new(log, net.hub_id(hub).unwrap());
        for t_o in [MINUTES_PER_DAY, 5 * MINUTES_PER_DAY + 330, 28 * MINUTES_PER_DAY + 1425] {
            let spec = IntervalSpec::day_ahead(t_o);
            let prev = view.bin_arrivals(&spec.at(t_o - MINUTES_PER_DAY)).unwrap().as_f64();
            assert_eq!(naive_forecast(&view, &spec).unwrap(), prev);
        }
        assert!(naive_forecast(&view, &IntervalSpec::day_ahead(MINUTES_PER_DAY - 15)).is_err());
    }
}

#[test]
fn grid_search_finds_the_best_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let series: Vec<f64> = (0..120).map(|i| 10.0 + [4.0, -2.0, 1.0, -3.0, 0.0, 0.0][i % 6] + rng.random_range(-1.0..1.0)).collect();
    let (best, mae) = grid_search(&series, 6, 60).unwrap();
    assert!(best.validate().is_ok());
    assert!(mae.is_finite() && mae < 2.0);
}
