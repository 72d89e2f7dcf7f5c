//! Fully connected feed-forward networks: ReLU hidden layers, a linear output
//! layer, mean-squared-error loss and Adam with decoupled weight decay.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"HCNN";
const FORMAT_VERSION: u32 = 1;

/// One affine layer. `weights` is `fan_in x fan_out`, so a batch is mapped
/// with `x.dot(&weights) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weights: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Dense>,
}

/// Parameter-shaped gradient collection, one entry per layer.
pub type Gradients = Vec<Dense>;

impl DenseNet {
    /// Network with layer sizes `dims = [inputs, hidden..., outputs]`, weights
    /// drawn uniformly from `±sqrt(6 / fan_in)` and zero biases.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let limit = (6.0 / layer.weights.nrows() as f64).sqrt();
            layer.weights.mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Shape(format!("invalid layer sizes {dims:?}")));
        }
        Ok(Self { layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.ncols() {
                return Err(Error::Shape(format!("layer {i}: bias does not match weights")));
            }
            if let Some(next) = layers.get(i + 1) {
                if next.weights.nrows() != l.weights.ncols() {
                    return Err(Error::Shape(format!("layers {i} and {} do not chain", i + 1)));
                }
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].weights.nrows()];
        dims.extend(self.layers.iter().map(|l| l.weights.ncols()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.params().all(|p| p.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.layers.iter().flat_map(Dense::params).map(|p| p * p).sum::<f64>().sqrt()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Forward pass over the rows of `x`.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.weights) + &layer.bias;
            if i + 1 < self.layers.len() {
                a.mapv_inplace(relu);
            }
        }
        Ok(a)
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {width}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Mean squared error over every output of every sample.
    pub fn loss(&self, batch: &Dataset) -> Result<f64> {
        batch.check(self)?;
        let pred = self.forward_batch(batch.inputs.view())?;
        Ok(mse(&pred, &batch.targets))
    }

    /// Exact gradient of [`DenseNet::loss`] with respect to every parameter.
    pub fn gradients(&self, batch: &Dataset) -> Result<Gradients> {
        batch.check(self)?;
        Ok(self.loss_and_gradients(batch.inputs.view(), batch.targets.view()).1)
    }

    fn loss_and_gradients(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> (f64, Gradients) {
        // Keep every layer's post-activation output for the backward pass.
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = match i {
                0 => x.dot(&layer.weights),
                _ => activations[i - 1].dot(&layer.weights),
            } + &layer.bias;
            if i + 1 < self.layers.len() {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }
        let pred = activations.pop().expect("at least one layer");
        let scale = 2.0 / pred.len() as f64;
        let mut loss = 0.0;
        let mut delta = pred;
        Zip::from(&mut delta).and(&y).for_each(|d, &t| {
            let err = *d - t;
            loss += err * err;
            *d = scale * err;
        });
        loss /= y.len() as f64;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let weights = match i {
                0 => x.t().dot(&delta),
                _ => activations[i - 1].t().dot(&delta),
            };
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                // ReLU derivative: the stored activation is zero exactly where z <= 0.
                Zip::from(&mut back).and(&activations[i - 1]).for_each(|b, &a| {
                    if a <= 0.0 {
                        *b = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense { weights, bias });
        }
        grads.reverse();
        (loss, grads)
    }

    /// Writes the parameters in the binary model format:
    ///
    /// `b"HCNN"`, format version (u32), layer-size count (u32), layer sizes
    /// (u32 each), then per layer the row-major `fan_in x fan_out` weights
    /// followed by the biases, all little-endian `f64`.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let dims = self.layer_dims();
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in &dims {
            out.write_all(&(*d as u32).to_le_bytes())?;
        }
        for layer in &self.layers {
            for p in layer.params() {
                out.write_all(&p.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Data("not a hubcast network file".into()));
        }
        let read_u32 = |input: &mut R| -> Result<u32> {
            let mut b = [0u8; 4];
            input.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let version = read_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported network format version {version}")));
        }
        let n = read_u32(&mut input)? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::Data(format!("implausible layer count {n}")));
        }
        let dims = (0..n).map(|_| read_u32(&mut input).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&dims)?;
        let mut buf = [0u8; 8];
        for layer in &mut net.layers {
            for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                input.read_exact(&mut buf)?;
                *p = f64::from_le_bytes(buf);
            }
        }
        Ok(net)
    }
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

fn mse(pred: &Array2<f64>, target: &Array2<f64>) -> f64 {
    let mut sum = 0.0;
    Zip::from(pred).and(target).for_each(|&p, &t| sum += (p - t) * (p - t));
    sum / pred.len() as f64
}

/// Paired input and target rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::Shape(format!(
                "{} input rows but {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_rows(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        Self::new(to_matrix(inputs)?, to_matrix(targets)?)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, net: &DenseNet) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        net.check_input(self.inputs.ncols())?;
        if self.targets.ncols() != net.output_dim() {
            return Err(Error::Shape(format!(
                "network has {} outputs, targets have {}",
                net.output_dim(),
                self.targets.ncols()
            )));
        }
        Ok(())
    }
}

/// Stacks equally long rows into a matrix.
pub fn to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::Shape("rows have different lengths".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), width), flat).expect("length checked"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    /// Mini-batch size; `None` trains on the full dataset each step.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize, weight_decay: f64, seed: u64) -> Result<Self> {
        let cfg = Self { learning_rate, epochs, weight_decay, batch_size: None, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Adam moment estimates, mirroring the network's parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Dense>,
    second: Vec<Dense>,
}

impl AdamState {
    pub fn new(net: &DenseNet) -> Self {
        let shape = || net.layers.iter().map(|l| Dense::zeros(l.weights.nrows(), l.weights.ncols())).collect();
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step: 0, first: shape(), second: shape() }
    }

    /// One AdamW update: decay the parameters by `lr * weight_decay`, then take
    /// the bias-corrected adaptive step.
    pub fn update(&mut self, net: &mut DenseNet, grads: &Gradients, lr: f64, weight_decay: f64) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let decay = 1.0 - lr * weight_decay;
        for (((layer, g), m), v) in net.layers.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second) {
            let pairs = [
                (layer.weights.view_mut().into_dyn(), g.weights.view().into_dyn(), m.weights.view_mut().into_dyn(), v.weights.view_mut().into_dyn()),
                (layer.bias.view_mut().into_dyn(), g.bias.view().into_dyn(), m.bias.view_mut().into_dyn(), v.bias.view_mut().into_dyn()),
            ];
            for (p, g, m, v) in pairs {
                Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p *= decay;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean loss per epoch, measured before each epoch's updates.
    pub losses: Vec<f64>,
}

/// Trains `net` in place. Deterministic for a fixed `cfg.seed`.
pub fn train(net: &mut DenseNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    data.check(net)?;
    let n = data.len();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = AdamState::new(net);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let (loss, grads) = if batch == n {
                net.loss_and_gradients(data.inputs.view(), data.targets.view())
            } else {
                let x = data.inputs.select(Axis(0), chunk);
                let y = data.targets.select(Axis(0), chunk);
                net.loss_and_gradients(x.view(), y.view())
            };
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss * chunk.len() as f64;
            adam.update(net, &grads, cfg.learning_rate, cfg.weight_decay);
        }
        losses.push(total / n as f64);
    }
    if !net.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs, loss: f64::NAN });
    }
    Ok(TrainReport { losses })
}

/// Per-column standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero spread get a unit scale so they pass through centred.
    pub fn fit(rows: &Array2<f64>) -> Self {
        let n = rows.nrows().max(1) as f64;
        let mean: Vec<f64> = rows.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std = rows
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                if var > 1e-12 { var.sqrt() } else { 1.0 }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, rows: &Array2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                rows.ncols()
            )));
        }
        let mut out = rows.clone();
        for (mut col, (m, s)) in out.axis_iter_mut(Axis(1)).zip(self.mean.iter().zip(&self.std)) {
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let m = to_matrix(&[row.to_vec()])?;
        Ok(self.apply(&m)?.into_raw_vec_and_offset().0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn naive_forward(net: &DenseNet, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let last = net.layers().len() - 1;
        for (i, layer) in net.layers().iter().enumerate() {
            let mut z = vec![0.0; layer.weights.ncols()];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut s = layer.bias[j];
                for (k, ak) in a.iter().enumerate() {
                    s += ak * layer.weights[[k, j]];
                }
                *zj = if i < last { s.max(0.0) } else { s };
            }
            a = z;
        }
        a
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = DenseNet::zeros(&[3, 4, 2]).unwrap();
        net.layers_mut()[1].bias = array![1.5, -2.0];
        net.layers_mut()[0].bias.fill(0.7);
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), [1.5, -2.0]);
    }

    #[test]
    fn relu_clips_negative_hidden_input() {
        let mut net = DenseNet::zeros(&[1, 1, 1]).unwrap();
        net.layers_mut()[0].weights[[0, 0]] = 1.0;
        net.layers_mut()[1].weights[[0, 0]] = 1.0;
        assert_eq!(net.forward(&[-3.0]).unwrap(), [0.0]);
        assert_eq!(net.forward(&[3.0]).unwrap(), [3.0]);
    }

    #[test]
    fn forward_matches_nested_loops() {
        let net = DenseNet::new(&[5, 7, 6, 3], 11).unwrap();
        let x = [0.3, -1.2, 2.0, 0.0, 0.8];
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let (y, y2) = (net.forward(&x).unwrap(), net.forward(&x2).unwrap());
        for (a, b) in y.iter().zip(naive_forward(&net, &x)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in y2.iter().zip(naive_forward(&net, &x2)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_ne!(y, y2);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = DenseNet::new(&[3, 2], 0).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn loss_examples() {
        let mut net = DenseNet::zeros(&[1, 1]).unwrap();
        net.layers_mut()[0].bias[0] = 2.0;
        let one = Dataset::new(array![[5.0]], array![[0.0]]).unwrap();
        assert_eq!(net.loss(&one).unwrap(), 4.0);
        let exact = Dataset::new(array![[5.0]], array![[2.0]]).unwrap();
        assert_eq!(net.loss(&exact).unwrap(), 0.0);
        let two = Dataset::new(array![[5.0], [1.0]], array![[0.0], [1.0]]).unwrap();
        assert_eq!(net.loss(&two).unwrap(), (4.0 + 1.0) / 2.0);
        let empty = Dataset::new(Array2::zeros((0, 1)), Array2::zeros((0, 1))).unwrap();
        assert!(net.loss(&empty).is_err());
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let net = DenseNet::new(&[2, 3, 2], 4).unwrap();
        let x = array![[0.5, -0.2], [1.0, 0.3]];
        let y = net.forward_batch(x.view()).unwrap();
        let grads = net.gradients(&Dataset::new(x, y).unwrap()).unwrap();
        assert!(grads.iter().all(|g| g.params().all(|&v| v == 0.0)));
    }

    #[test]
    fn one_one_one_closed_form() {
        // y = w2 * relu(w1 x + b1) + b2, L = (y - t)^2
        let (w1, b1, w2, b2, x, t) = (0.8, 0.1, -1.5, 0.4, 2.0, 1.0);
        let mut net = DenseNet::zeros(&[1, 1, 1]).unwrap();
        net.layers_mut()[0].weights[[0, 0]] = w1;
        net.layers_mut()[0].bias[0] = b1;
        net.layers_mut()[1].weights[[0, 0]] = w2;
        net.layers_mut()[1].bias[0] = b2;
        let h: f64 = w1 * x + b1; // 1.7, active
        let y = w2 * h + b2; // -2.15
        let dy = 2.0 * (y - t); // -6.3
        let g = net.gradients(&Dataset::new(array![[x]], array![[t]]).unwrap()).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(g[1].bias[0], dy));
        assert!(close(g[1].weights[[0, 0]], dy * h));
        assert!(close(g[0].bias[0], dy * w2));
        assert!(close(g[0].weights[[0, 0]], dy * w2 * x));
        assert!(close(dy, -6.3));
    }

    #[test]
    fn train_rejects_zero_epochs() {
        assert!(TrainConfig::new(0.01, 0, 0.0, 1).is_err());
        assert!(TrainConfig::new(0.0, 5, 0.0, 1).is_err());
    }

    fn linear_dataset() -> Dataset {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 4.0 - 1.0, ((i * 3) % 8) as f64 / 8.0]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![2.0 * x[0] - x[1] + 0.5, x[0] + x[1]]).collect();
        Dataset::from_rows(&xs, &ys).unwrap()
    }

    #[test]
    fn overfits_small_linear_dataset() {
        let data = linear_dataset();
        let mut net = DenseNet::new(&[2, 16, 16, 2], 3).unwrap();
        let initial = net.loss(&data).unwrap();
        let cfg = TrainConfig::new(0.01, 500, 0.0, 3).unwrap();
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(report.losses.len(), 500);
        let last = net.loss(&data).unwrap();
        assert!(last < 0.01 * initial, "initial {initial}, final {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = linear_dataset();
        let run = || {
            let mut net = DenseNet::new(&[2, 8, 2], 5).unwrap();
            let mut cfg = TrainConfig::new(0.05, 30, 0.01, 9).unwrap();
            cfg.batch_size = Some(3);
            train(&mut net, &data, &cfg).unwrap();
            let mut bytes = Vec::new();
            net.save(&mut bytes).unwrap();
            bytes
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_names_epoch() {
        let data = Dataset::new(array![[1e200]], array![[0.0]]).unwrap();
        let mut net = DenseNet::new(&[1, 4, 1], 1).unwrap();
        net.layers_mut()[0].bias.fill(1.0);
        net.layers_mut()[0].weights.fill(1.0);
        let cfg = TrainConfig::new(0.01, 5, 0.0, 1).unwrap();
        match train(&mut net, &data, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn decay_shrinks_parameters_at_zero_gradient() {
        let mut net = DenseNet::new(&[3, 5, 2], 8).unwrap();
        net.layers_mut()[0].bias.fill(0.3);
        let zero: Gradients = net.layers().iter().map(|l| Dense::zeros(l.weights.nrows(), l.weights.ncols())).collect();
        let mut adam = AdamState::new(&net);
        let mut norm = net.l2_norm();
        for _ in 0..20 {
            adam.update(&mut net, &zero, 0.05, 0.01);
            let next = net.l2_norm();
            assert!(next < norm);
            norm = next;
        }
    }

    #[test]
    fn save_load_round_trip() {
        let net = DenseNet::new(&[4, 3, 2], 21).unwrap();
        let mut bytes = Vec::new();
        net.save(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HCNN");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 3 * 4 + 8 * net.param_count());
        assert_eq!(DenseNet::load(bytes.as_slice()).unwrap(), net);
        bytes[0] = b'X';
        assert!(DenseNet::load(bytes.as_slice()).is_err());
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let rows = array![[1.0, 5.0], [3.0, 5.0]];
        let s = Standardizer::fit(&rows);
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.std, [1.0, 1.0]);
        assert_eq!(s.apply(&rows).unwrap(), array![[-1.0, 0.0], [1.0, 0.0]]);
        assert!(s.apply_row(&[1.0]).is_err());
    }
}
