//! Dense feedforward networks trained with backpropagation and ADAM.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(layer_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            layer_sizes,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig("a network needs at least two layers"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig("layer sizes must be positive"));
        }
        if self.output_activation != Activation::Linear {
            return Err(Error::InvalidConfig("only a linear output layer is supported"));
        }
        Ok(())
    }
}

/// Affine map `y = W x + b` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            out.push(b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Per-feature z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Statistics of `rows`; constant features get unit scale.
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyDataset);
        };
        let n = first.len();
        let count = rows.len() as f64;
        let mut mean = vec![0.0; n];
        for r in rows {
            check(n, r.len())?;
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= count;
        }
        let mut var = vec![0.0; n];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check(self.mean.len(), x.len())?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub layers: Vec<Layer>,
    pub input_norm: Normalization,
}

/// Gradients with the same shapes as the network layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Network {
    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let limit = (6.0 / (i + o) as f64).sqrt();
                let mut l = Layer::zeros(i, o);
                for v in &mut l.weights {
                    *v = rng.gen_range(-limit..=limit);
                }
                l
            })
            .collect();
        Ok(Self {
            layer_sizes: config.layer_sizes.clone(),
            hidden_activation: config.hidden_activation,
            output_activation: config.output_activation,
            layers,
            input_norm: Normalization::identity(config.layer_sizes[0]),
        })
    }

    /// Checks that layers, sizes and normalization agree.
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layers.len() + 1 != self.layer_sizes.len() {
            return Err(Error::InvalidConfig("layer list does not match layer sizes"));
        }
        for (l, w) in self.layers.iter().zip(self.layer_sizes.windows(2)) {
            if l.inputs != w[0] || l.outputs != w[1] || l.weights.len() != w[0] * w[1] || l.biases.len() != w[1] {
                return Err(Error::InvalidConfig("layer shape does not chain"));
            }
        }
        if self.input_norm.mean.len() != self.layer_sizes[0] || self.input_norm.std.len() != self.layer_sizes[0] {
            return Err(Error::InvalidConfig("normalization width does not match the input layer"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        self.layer_sizes[self.layer_sizes.len() - 1]
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Normalizes `input` with the stored statistics and runs the layers.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = self.input_norm.apply(input)?;
        let acts = self.activations(&x);
        Ok(acts.into_iter().last().expect("at least one layer"))
    }

    /// Every layer's output for an already-normalized input, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(&acts[i], &mut out);
            let a = self.activation(i);
            for v in &mut out {
                *v = a.apply(*v);
            }
            acts.push(out);
        }
        acts
    }

    /// Mean squared error over samples and outputs, and its exact gradient.
    pub fn gradients(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(f64, Gradients)> {
        let rows: Vec<&[f64]> = inputs.iter().map(|r| r.as_slice()).collect();
        let ts: Vec<&[f64]> = targets.iter().map(|r| r.as_slice()).collect();
        self.batch_gradients(&rows, &ts)
    }

    fn batch_gradients(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<(f64, Gradients)> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check(inputs.len(), targets.len())?;
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        };
        let scale = 1.0 / (inputs.len() * self.output_size()) as f64;
        let mut loss = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            check(self.output_size(), t.len())?;
            let xn = self.input_norm.apply(x)?;
            let acts = self.activations(&xn);
            let out = &acts[acts.len() - 1];
            let mut delta: Vec<f64> = out
                .iter()
                .zip(t.iter())
                .map(|(y, t)| {
                    loss += (y - t) * (y - t);
                    2.0 * (y - t) * scale
                })
                .collect();
            for i in (0..self.layers.len()).rev() {
                let a = self.activation(i);
                for (d, y) in delta.iter_mut().zip(&acts[i + 1]) {
                    *d *= a.derivative(*y);
                }
                let layer = &self.layers[i];
                let g = &mut grads.layers[i];
                let prev = &acts[i];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, p) in row.iter_mut().zip(prev) {
                        *gw += d * p;
                    }
                }
                if i > 0 {
                    let mut next = vec![0.0; layer.inputs];
                    for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                        for (n, w) in next.iter_mut().zip(row) {
                            *n += w * d;
                        }
                    }
                    delta = next;
                }
            }
        }
        Ok((loss * scale, grads))
    }

    /// Mean squared error over samples and outputs.
    pub fn mse(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check(inputs.len(), targets.len())?;
        let mut total = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let y = self.forward(x)?;
            check(y.len(), t.len())?;
            total += y.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / (inputs.len() * self.output_size()) as f64)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

impl Gradients {
    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }
}

fn check(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// ADAM optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in net.params_mut().zip(grads.values()).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train fraction must be in (0, 1)"));
        }
        if !(self.learning_rate >= 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be non-negative and epsilon positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::InvalidConfig("ADAM betas must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Seeded split of `n` indices into `(train, validation)`.
///
/// The training part has `round(n * fraction)` entries, clamped so both
/// parts are non-empty when `n >= 2`.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut k = (n as f64 * fraction).round() as usize;
    if n >= 2 {
        k = k.clamp(1, n - 1);
    }
    let val = idx.split_off(k.min(n));
    (idx, val)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Extra validation metric, when one was supplied.
    pub val_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Validation loss before the first update.
    pub initial_val_loss: f64,
}

/// Validation metric evaluated after every epoch on the validation indices.
pub type EpochMetric<'a> = dyn FnMut(&Network, &[usize]) -> Result<f64> + 'a;

/// Trains `net` on `(inputs, targets)` with seeded split, shuffling and ADAM.
///
/// Input statistics are refit on the training split. Training loss is the
/// mean batch loss seen during the epoch; validation loss is measured after it.
pub fn train(
    net: Network,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
    metric: Option<&mut EpochMetric<'_>>,
) -> Result<(Network, TrainReport)> {
    if inputs.len() < 2 {
        return Err(if inputs.is_empty() {
            Error::EmptyDataset
        } else {
            Error::InvalidArgument("training needs at least two samples")
        });
    }
    let (train_idx, val_idx) = split_indices(inputs.len(), config.train_fraction, config.seed);
    train_with_split(net, inputs, targets, config, train_idx, val_idx, metric)
}

/// Same as [`train`] with a caller-chosen split, for rows that must stay
/// together. `config.train_fraction` is not used.
pub fn train_with_split(
    mut net: Network,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    mut metric: Option<&mut EpochMetric<'_>>,
) -> Result<(Network, TrainReport)> {
    config.validate()?;
    net.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check(inputs.len(), targets.len())?;
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidArgument("training and validation splits must be non-empty"));
    }
    if train_idx.iter().chain(&val_idx).any(|&i| i >= inputs.len()) {
        return Err(Error::InvalidArgument("split index out of range"));
    }
    for (x, t) in inputs.iter().zip(targets) {
        check(net.input_size(), x.len())?;
        check(net.output_size(), t.len())?;
    }
    let train_rows: Vec<&[f64]> = train_idx.iter().map(|&i| inputs[i].as_slice()).collect();
    net.input_norm = Normalization::fit(&train_rows)?;
    let val_x: Vec<&[f64]> = val_idx.iter().map(|&i| inputs[i].as_slice()).collect();
    let val_t: Vec<&[f64]> = val_idx.iter().map(|&i| targets[i].as_slice()).collect();

    let mut adam = Adam::new(
        net.num_params(),
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let initial_val_loss = net.mse(&val_x, &val_t)?;
    let mut order = train_idx.clone();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let bt: Vec<&[f64]> = batch.iter().map(|&i| targets[i].as_slice()).collect();
            let (loss, grads) = net.batch_gradients(&bx, &bt)?;
            weighted += loss * batch.len() as f64;
            adam.step(&mut net, &grads);
        }
        let val_loss = net.mse(&val_x, &val_t)?;
        let val_metric = match metric.as_mut() {
            Some(f) => Some(f(&net, &val_idx)?),
            None => None,
        };
        epochs.push(EpochStats {
            epoch,
            train_loss: weighted / order.len() as f64,
            val_loss,
            val_metric,
        });
    }
    Ok((
        net,
        TrainReport {
            epochs,
            train_indices: train_idx,
            val_indices: val_idx,
            initial_val_loss,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_net(sizes: &[usize], seed: u64) -> Network {
        let mut net = Network::new(&NetworkConfig::new(sizes.to_vec(), seed)).unwrap();
        // non-zero biases and input statistics so every path is exercised
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        for l in &mut net.layers {
            for b in &mut l.biases {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        for (m, s) in net.input_norm.mean.iter_mut().zip(net.input_norm.std.iter_mut()) {
            *m = rng.gen_range(-1.0..1.0);
            *s = rng.gen_range(0.5..2.0);
        }
        net
    }

    fn random_rows(n: usize, width: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..width).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect()
    }

    /// Naive loops straight from the layer definition.
    fn oracle_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = (0..x.len())
            .map(|i| (x[i] - net.input_norm.mean[i]) / net.input_norm.std[i])
            .collect();
        for (li, l) in net.layers.iter().enumerate() {
            let mut out = vec![0.0; l.outputs];
            for o in 0..l.outputs {
                let mut s = l.biases[o];
                for i in 0..l.inputs {
                    s += l.weights[o * l.inputs + i] * a[i];
                }
                out[o] = if li + 1 < net.layers.len() { s.max(0.0) } else { s };
            }
            a = out;
        }
        a
    }

    fn max_rel_fd_error(net: &Network, xs: &[Vec<f64>], ts: &[Vec<f64>]) -> f64 {
        let (_, g) = net.gradients(xs, ts).unwrap();
        let analytic: Vec<f64> = g.values().copied().collect();
        let mut probe = net.clone();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for (i, a) in analytic.iter().enumerate() {
            let base = *probe.params_mut().nth(i).unwrap();
            *probe.params_mut().nth(i).unwrap() = base + h;
            let up = probe.gradients(xs, ts).unwrap().0;
            *probe.params_mut().nth(i).unwrap() = base - h;
            let down = probe.gradients(xs, ts).unwrap().0;
            *probe.params_mut().nth(i).unwrap() = base;
            let fd = (up - down) / (2.0 * h);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = random_net(&[3, 4, 2], 1);
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_returns_normalized_input() {
        let mut net = Network::new(&NetworkConfig::new(vec![3, 3], 0)).unwrap();
        net.layers[0].weights = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        net.input_norm = Normalization {
            mean: vec![1.0, 2.0, 3.0],
            std: vec![2.0, 4.0, 0.5],
        };
        assert_eq!(net.forward(&[3.0, 2.0, 4.0]).unwrap(), vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let net = random_net(&[7, 50, 200], 9);
        for x in random_rows(5, 7, 2) {
            let y = net.forward(&x).unwrap();
            let r = oracle_forward(&net, &x);
            for (a, b) in y.iter().zip(&r) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(net.forward(&[0.0; 6]).is_err());
    }

    #[test]
    fn single_linear_neuron_gradient() {
        let mut net = Network::new(&NetworkConfig::new(vec![1, 1], 0)).unwrap();
        net.layers[0].weights = vec![0.7];
        net.layers[0].biases = vec![0.2];
        let (x, t) = (1.5, 0.4);
        let y = 0.7 * x + 0.2;
        let (loss, g) = net.gradients(&[vec![x]], &[vec![t]]).unwrap();
        assert!((loss - (y - t) * (y - t)).abs() < 1e-15);
        assert!((g.layers[0].weights[0] - 2.0 * (y - t) * x).abs() < 1e-15);
        assert!((g.layers[0].biases[0] - 2.0 * (y - t)).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_has_zero_gradient() {
        let net = random_net(&[4, 6, 3], 5);
        let xs = random_rows(3, 4, 6);
        let ts: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
        let (loss, g) = net.gradients(&xs, &ts).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.values().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_check_small() {
        let net = random_net(&[3, 5, 4, 2], 3);
        let xs = random_rows(4, 3, 4);
        let ts = random_rows(4, 2, 5);
        assert!(max_rel_fd_error(&net, &xs, &ts) < 1e-4);
    }

    #[test]
    fn gradient_check_paper_shapes() {
        for sizes in [vec![7, 50, 200], vec![4, 64, 32, 1]] {
            let net = random_net(&sizes, 17);
            let xs = random_rows(3, sizes[0], 18);
            let ts = random_rows(3, *sizes.last().unwrap(), 19);
            let e = max_rel_fd_error(&net, &xs, &ts);
            assert!(e < 1e-4, "{sizes:?}: {e}");
        }
    }

    #[test]
    fn normalization_stats_zscore_training_rows() {
        let rows = random_rows(50, 4, 8);
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let norm = Normalization::fit(&refs).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| norm.apply(r).unwrap()).collect();
        for j in 0..4 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
        let constant = Normalization::fit(&[&[2.0][..], &[2.0][..]]).unwrap();
        assert_eq!(constant.apply(&[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn adam_with_zero_gradient_keeps_parameters() {
        let mut net = random_net(&[3, 4, 2], 2);
        let before = net.clone();
        let zero = Gradients {
            layers: net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        };
        let mut adam = Adam::new(net.num_params(), 1e-3, 0.9, 0.999, 1e-8);
        for _ in 0..5 {
            adam.step(&mut net, &zero);
        }
        assert_eq!(net, before);
    }

    fn line_data(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect();
        let ts = xs.iter().map(|x| vec![3.0 * x[0]]).collect();
        (xs, ts)
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let (xs, ts) = line_data(20);
        let net = Network::new(&NetworkConfig::new(vec![1, 4, 1], 3)).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 4,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (trained, _) = train(net.clone(), &xs, &ts, &cfg, None).unwrap();
        assert_eq!(trained.layers, net.layers);
    }

    #[test]
    fn learns_a_line() {
        let (xs, ts) = line_data(64);
        let net = Network::new(&NetworkConfig::new(vec![1, 1], 3)).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 8,
            learning_rate: 0.05,
            seed: 4,
            ..TrainConfig::default()
        };
        let (trained, report) = train(net, &xs, &ts, &cfg, None).unwrap();
        // undo the input scaling to read off the slope in raw units
        let slope = trained.layers[0].weights[0] / trained.input_norm.std[0];
        assert!((slope - 3.0).abs() < 1e-2, "{slope}");
        assert_eq!(report.epochs.len(), 200);
        assert!(report.epochs[199].val_loss < report.initial_val_loss);
    }

    #[test]
    fn training_is_deterministic() {
        let xs = random_rows(40, 3, 1);
        let ts: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * x[1], x[2].sin()]).collect();
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 7,
            seed: 12,
            ..TrainConfig::default()
        };
        let run = || {
            let net = Network::new(&NetworkConfig::new(vec![3, 8, 2], 5)).unwrap();
            train(net, &xs, &ts, &cfg, None).unwrap()
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        for (x, y) in ra.epochs.iter().zip(&rb.epochs) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
        }
    }

    #[test]
    fn metric_is_reported_each_epoch() {
        let (xs, ts) = line_data(20);
        let net = Network::new(&NetworkConfig::new(vec![1, 1], 3)).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 5,
            ..TrainConfig::default()
        };
        let mut calls = 0;
        let mut m = |_: &Network, idx: &[usize]| {
            calls += 1;
            Ok(idx.len() as f64)
        };
        let (_, report) = train(net, &xs, &ts, &cfg, Some(&mut m)).unwrap();
        assert_eq!(calls, 3);
        assert!(report.epochs.iter().all(|e| e.val_metric == Some(6.0)));
    }

    #[test]
    fn split_sizes_and_seeds() {
        let (a, b) = split_indices(100, 0.7, 1);
        assert_eq!((a.len(), b.len()), (70, 30));
        let (c, d) = split_indices(100, 0.7, 2);
        assert_eq!((c.len(), d.len()), (70, 30));
        assert_ne!(a, c);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let (e, f) = split_indices(3, 0.99, 0);
        assert_eq!((e.len(), f.len()), (2, 1));
    }

    #[test]
    fn explicit_split_matches_the_seeded_one() {
        let (xs, ts) = line_data(30);
        let cfg = TrainConfig {
            epochs: 4,
            batch_size: 6,
            seed: 9,
            ..TrainConfig::default()
        };
        let net = Network::new(&NetworkConfig::new(vec![1, 3, 1], 2)).unwrap();
        let (tr, va) = split_indices(30, cfg.train_fraction, cfg.seed);
        let a = train(net.clone(), &xs, &ts, &cfg, None).unwrap();
        let b = train_with_split(net.clone(), &xs, &ts, &cfg, tr.clone(), va, None).unwrap();
        assert_eq!(a, b);
        assert!(train_with_split(net.clone(), &xs, &ts, &cfg, tr.clone(), vec![], None).is_err());
        assert!(train_with_split(net, &xs, &ts, &cfg, tr, vec![30], None).is_err());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let net = Network::new(&NetworkConfig::new(vec![1, 1], 3)).unwrap();
        assert!(train(net.clone(), &[], &[], &TrainConfig::default(), None).is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(net.clone(), &[vec![0.0], vec![1.0]], &[vec![0.0], vec![1.0]], &bad, None).is_err());
        assert!(Network::new(&NetworkConfig::new(vec![3], 0)).is_err());
        assert!(Network::new(&NetworkConfig::new(vec![3, 0, 1], 0)).is_err());
    }
}
