use hubcast::ann::TrainConfig;
use hubcast::datastore::Calendar;
use hubcast::ensemble::{combine_ann, combine_sum, default_train_config, train_ensemble, EnsembleInput, EnsembleModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mse(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n: usize = a.iter().map(Vec::len).sum();
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n as f64
}

/// Sub-model forecasts with a systematic bias the combiner can learn: the
/// unordered model under-forecasts by 30% and the ordered one over-forecasts
/// by two parcels per period.
fn biased(n: usize, periods: usize, seed: u64) -> (Vec<EnsembleInput>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::new();
    let mut totals = Vec::new();
    for i in 0..n {
        let u: Vec<f64> = (0..periods).map(|_| rng.random_range(0.0..20.0)).collect();
        let o: Vec<f64> = (0..periods).map(|_| rng.random_range(2.0..30.0)).collect();
        totals.push(u.iter().zip(&o).map(|(u, o)| 1.3 * u + o - 2.0).collect());
        inputs.push(EnsembleInput { u_hat: u, o_hat: o, calendar: Calendar::at(2880 + 15 * i as u32, 15) });
    }
    (inputs, totals)
}

#[test]
fn learned_combiner_beats_summation_on_biased_inputs() {
    let (train_x, train_y) = biased(200, 4, 1);
    let (test_x, test_y) = biased(100, 4, 2);
    let cfg = TrainConfig { epochs: 400, ..default_train_config(9) };
    let (model, report) = train_ensemble(&train_x, &train_y, &cfg).unwrap();
    assert!(report.losses.last().unwrap() < &report.losses[0]);
    let ann: Vec<Vec<f64>> = model.combine_many(&test_x).unwrap();
    let sum: Vec<Vec<f64>> = test_x.iter().map(|i| combine_sum(&i.u_hat, &i.o_hat).unwrap()).collect();
    let (e_ann, e_sum) = (mse(&ann, &test_y), mse(&sum, &test_y));
    assert!(e_ann < e_sum, "ann {e_ann} vs sum {e_sum}");
}

#[test]
fn training_is_reproducible_and_round_trips() {
    let (x, y) = biased(30, 3, 4);
    let cfg = TrainConfig { epochs: 20, ..default_train_config(3) };
    let (a, _) = train_ensemble(&x, &y, &cfg).unwrap();
    let (b, _) = train_ensemble(&x, &y, &cfg).unwrap();
    assert_eq!(a.net, b.net);
    let out = a.combine_many(&x).unwrap();
    assert_eq!(out, b.combine_many(&x).unwrap());
    assert!(out.iter().all(|r| r.len() == 3 && r.iter().all(|&v| v >= 0.0)));
    assert_eq!(combine_ann(&a, &x[5]).unwrap(), out[5]);

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path(), "ensemble").unwrap();
    let back = EnsembleModel::load(dir.path(), "ensemble").unwrap();
    assert_eq!(back.combine_many(&x).unwrap(), out);
}

proptest! {
    #[test]
    fn summation_is_commutative_and_linear(
        pairs in prop::collection::vec((0.0f64..1e4, 0.0f64..1e4), 0..100),
        k in 0.0f64..10.0,
    ) {
        let (u, o): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let s = combine_sum(&u, &o).unwrap();
        prop_assert_eq!(&s, &combine_sum(&o, &u).unwrap());
        let (ku, ko): (Vec<f64>, Vec<f64>) = (u.iter().map(|v| k * v).collect(), o.iter().map(|v| k * v).collect());
        for (a, b) in combine_sum(&ku, &ko).unwrap().iter().zip(&s) {
            prop_assert!((a - k * b).abs() <= 1e-9 * (k * b).max(1.0));
        }
        prop_assert!(s.iter().all(|&v| v >= 0.0));
    }
}
