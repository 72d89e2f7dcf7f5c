use hubcast::ann::{train, AdamState, Dataset, DenseNet, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

/// Hidden-layer pre-activations for one input, computed with plain loops.
fn pre_activations(net: &DenseNet, x: &[f64]) -> Vec<Vec<f64>> {
    let mut a = x.to_vec();
    let mut out = Vec::new();
    let layers = net.layers();
    for (i, l) in layers.iter().enumerate() {
        let z: Vec<f64> = (0..l.weights.ncols())
            .map(|j| l.bias[j] + (0..a.len()).map(|k| a[k] * l.weights[[k, j]]).sum::<f64>())
            .collect();
        if i + 1 < layers.len() {
            a = z.iter().map(|v| v.max(0.0)).collect();
            out.push(z);
        }
    }
    out
}

struct Case {
    net: DenseNet,
    data: Dataset,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let depth = rng.random_range(1..=2);
        let mut dims = vec![rng.random_range(1..=5)];
        for _ in 0..depth {
            dims.push(rng.random_range(1..=8));
        }
        dims.push(rng.random_range(1..=4));
        let net = DenseNet::new(&dims, rng.random()).unwrap();
        if net.param_count() > 200 {
            continue;
        }
        let mut net = net;
        for l in net.layers_mut() {
            l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        let n = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..dims[0]).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<Vec<f64>> =
            (0..n).map(|_| (0..*dims.last().unwrap()).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        // Finite differences are meaningless across a ReLU kink.
        let margin = xs.iter().flat_map(|x| pre_activations(&net, x)).flatten().fold(f64::INFINITY, |m, z| m.min(z.abs()));
        if margin < 1e-3 {
            continue;
        }
        return Case { net, data: Dataset::from_rows(&xs, &ys).unwrap() };
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn max_gradient_error(case: &Case) -> f64 {
    let analytic = case.net.gradients(&case.data).unwrap();
    let mut worst: f64 = 0.0;
    for li in 0..case.net.layers().len() {
        let (rows, cols) = case.net.layers()[li].weights.dim();
        let mut probe = |set: &dyn Fn(&mut DenseNet, f64), g: f64| {
            let mut plus = case.net.clone();
            set(&mut plus, H);
            let mut minus = case.net.clone();
            set(&mut minus, -H);
            let numeric = (plus.loss(&case.data).unwrap() - minus.loss(&case.data).unwrap()) / (2.0 * H);
            worst = worst.max(relative_error(g, numeric));
        };
        for r in 0..rows {
            for c in 0..cols {
                probe(&|n: &mut DenseNet, d| n.layers_mut()[li].weights[[r, c]] += d, analytic[li].weights[[r, c]]);
            }
        }
        for c in 0..cols {
            probe(&|n: &mut DenseNet, d| n.layers_mut()[li].bias[c] += d, analytic[li].bias[c]);
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn gradients_match_central_differences(seed in any::<u64>()) {
        let case = random_case(seed);
        let err = max_gradient_error(&case);
        prop_assert!(err < 1e-4, "dims {:?} rel err {err:e}", case.net.layer_dims());
    }

    #[test]
    fn hidden_activations_are_non_negative(seed in any::<u64>(), x in prop::collection::vec(-10.0f64..10.0, 4)) {
        let net = DenseNet::new(&[4, 6, 5, 2], seed).unwrap();
        for z in pre_activations(&net, &x) {
            prop_assert!(z.iter().map(|v| v.max(0.0)).all(|a| a >= 0.0));
        }
        // Unit output weights and zero bias: outputs are sums of activations.
        let mut probe = net.clone();
        let last = probe.layers().len() - 1;
        probe.layers_mut()[last].weights.fill(1.0);
        probe.layers_mut()[last].bias.fill(0.0);
        prop_assert!(probe.forward(&x).unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn decay_never_grows_parameters_at_zero_gradient(seed in any::<u64>(), wd in 0.001f64..0.5) {
        let mut net = DenseNet::new(&[3, 4, 2], seed).unwrap();
        let zero = DenseNet::zeros(&[3, 4, 2]).unwrap().layers().to_vec();
        let mut adam = AdamState::new(&net);
        let mut last = net.l2_norm();
        for _ in 0..20 {
            adam.update(&mut net, &zero, 0.05, wd);
            let now = net.l2_norm();
            prop_assert!(now <= last);
            last = now;
        }
    }
}

#[test]
fn training_is_seed_deterministic_and_seed_sensitive() {
    let case = random_case(11);
    let cfg = TrainConfig { batch_size: Some(3), ..TrainConfig::new(0.01, 30, 0.01, 5).unwrap() };
    let fit = |seed: u64| {
        let mut net = case.net.clone();
        let report = train(&mut net, &case.data, &TrainConfig { seed, ..cfg }).unwrap();
        (net, report.losses)
    };
    let (a, la) = fit(5);
    let (b, lb) = fit(5);
    assert_eq!(a, b);
    assert_eq!(la, lb);
    if case.data.len() > 3 {
        assert_ne!(fit(6).1, la);
    }
}

#[test]
fn fifty_gradient_checks_finish_quickly() {
    let start = std::time::Instant::now();
    for seed in 0..50 {
        let case = random_case(seed);
        assert!(max_gradient_error(&case) < 1e-4, "seed {seed}");
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
}
