//! A small fully-connected coordinate regressor: 3 RSSI inputs, 1–5 ReLU
//! hidden layers, and a 2-unit linear output for (x, y).
//!
//! Training minimizes the batch-mean squared Euclidean distance with Adam.
//! Inputs are standardized with statistics frozen from the training set.
//! Everything is deterministic for a fixed seed: He initialization and epoch
//! shuffles come from one seeded generator, and batches are visited in
//! shuffle order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::data::{Dataset, INPUTS_PER_SAMPLE};
use crate::error::{Error, Result};
use crate::types::Position;

pub const OUTPUTS: usize = 2;
pub const MAX_HIDDEN_LAYERS: usize = 5;
/// Pre-activations closer to zero than this make the ReLU gradient
/// ill-defined for finite differencing.
pub const GRADIENT_KINK_MARGIN: f64 = 1e-6;
/// Central-difference step for the gradient check.
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// ReLU hidden layers, 1–5.
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: 3,
            neurons_per_layer: 32,
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_layers > MAX_HIDDEN_LAYERS {
            return Err(Error::invalid(format!(
                "hidden_layers must be in 1..={MAX_HIDDEN_LAYERS}"
            )));
        }
        if self.neurons_per_layer == 0 {
            return Err(Error::invalid("neurons_per_layer must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be > 0"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be finite and > 0"));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must be in [0, 1)")));
            }
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return Err(Error::invalid("adam_epsilon must be finite and > 0"));
        }
        Ok(())
    }
}

/// One dense layer; `weights[o * in_dim + i]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Per-feature shift/scale frozen from the training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; INPUTS_PER_SAMPLE],
    pub std: [f64; INPUTS_PER_SAMPLE],
}

impl Standardizer {
    /// Population statistics; a constant feature gets scale 1 so it maps to 0.
    pub fn fit(inputs: &[[f64; INPUTS_PER_SAMPLE]]) -> Self {
        let n = inputs.len().max(1) as f64;
        let mut mean = [0.0; INPUTS_PER_SAMPLE];
        let mut std = [0.0; INPUTS_PER_SAMPLE];
        for x in inputs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for x in inputs {
            for ((s, v), m) in std.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        }
        Standardizer { mean, std }
    }

    pub fn identity() -> Self {
        Standardizer { mean: [0.0; INPUTS_PER_SAMPLE], std: [1.0; INPUTS_PER_SAMPLE] }
    }

    pub fn apply(&self, x: &[f64; INPUTS_PER_SAMPLE]) -> [f64; INPUTS_PER_SAMPLE] {
        let mut out = [0.0; INPUTS_PER_SAMPLE];
        for i in 0..INPUTS_PER_SAMPLE {
            out[i] = (x[i] - self.mean[i]) / self.std[i];
        }
        out
    }
}

/// A trained coordinate regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub standardizer: Standardizer,
    pub config: MlpConfig,
}

impl Mlp {
    /// Structural checks for models loaded from disk.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("model has no layers"));
        }
        let mut expect = INPUTS_PER_SAMPLE;
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.in_dim != expect {
                return Err(Error::invalid(format!(
                    "layer {li} expects {} inputs, previous layer provides {expect}",
                    layer.in_dim
                )));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(Error::invalid(format!("layer {li} has mismatched parameter counts")));
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {li} has non-finite parameters")));
            }
            expect = layer.out_dim;
        }
        if expect != OUTPUTS {
            return Err(Error::invalid(format!("model produces {expect} outputs, expected {OUTPUTS}")));
        }
        if self.standardizer.mean.iter().any(|v| !v.is_finite())
            || self.standardizer.std.iter().any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::invalid("standardizer statistics are invalid"));
        }
        Ok(())
    }

    /// Predicts a position from one RSSI triple.
    pub fn forward(&self, input: &[f64; INPUTS_PER_SAMPLE]) -> Result<Position> {
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite network input"));
        }
        let x = self.standardizer.apply(input);
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            a = layer_forward(layer, &a, li < last);
        }
        let p = Position::new(a[0], a[1]);
        if !p.is_finite() {
            return Err(Error::invalid("non-finite network output"));
        }
        Ok(p)
    }
}

fn layer_forward(layer: &Layer, input: &[f64], relu: bool) -> Vec<f64> {
    let mut out = vec![0.0; layer.out_dim];
    for o in 0..layer.out_dim {
        let mut z = layer.biases[o];
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        for (w, x) in row.iter().zip(input) {
            z += w * x;
        }
        out[o] = if relu { z.max(0.0) } else { z };
    }
    out
}

fn network_dims(config: &MlpConfig) -> Vec<usize> {
    let mut dims = vec![INPUTS_PER_SAMPLE];
    dims.extend(std::iter::repeat(config.neurons_per_layer).take(config.hidden_layers));
    dims.push(OUTPUTS);
    dims
}

/// He-normal weights, zero biases, drawn in layer then row-major order.
fn init_layers(dims: &[usize], rng: &mut ChaCha12Rng) -> Result<Vec<Layer>> {
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let weights = (0..in_dim * out_dim).map(|_| normal.sample(rng)).collect();
        layers.push(Layer { in_dim, out_dim, weights, biases: vec![0.0; out_dim] });
    }
    Ok(layers)
}

/// Forward pass that keeps pre-activations and activations for backprop.
/// `acts[0]` is the input; `acts[l + 1]` and `pre[l]` belong to layer `l`.
fn forward_trace(layers: &[Layer], x: &[f64], acts: &mut [Vec<f64>], pre: &mut [Vec<f64>]) {
    acts[0].clear();
    acts[0].extend_from_slice(x);
    let last = layers.len() - 1;
    for (l, layer) in layers.iter().enumerate() {
        for o in 0..layer.out_dim {
            let mut z = layer.biases[o];
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (w, a) in row.iter().zip(&acts[l]) {
                z += w * a;
            }
            pre[l][o] = z;
            acts[l + 1][o] = if l < last { z.max(0.0) } else { z };
        }
    }
}

/// Accumulates one sample's gradient of `‖pred − target‖²` into `gw`/`gb`.
/// Returns the sample loss. Expects `forward_trace` to have been run.
#[allow(clippy::too_many_arguments)]
fn backward_accumulate(
    layers: &[Layer],
    acts: &[Vec<f64>],
    pre: &[Vec<f64>],
    target: Position,
    deltas: &mut [Vec<f64>],
    gw: &mut [Vec<f64>],
    gb: &mut [Vec<f64>],
) -> f64 {
    let last = layers.len() - 1;
    let pred = &acts[last + 1];
    let res = [pred[0] - target.x, pred[1] - target.y];
    let loss = res[0] * res[0] + res[1] * res[1];
    deltas[last][0] = 2.0 * res[0];
    deltas[last][1] = 2.0 * res[1];
    for l in (0..layers.len()).rev() {
        // Parameter gradients for layer l.
        for o in 0..layers[l].out_dim {
            let d = deltas[l][o];
            gb[l][o] += d;
            let row = &mut gw[l][o * layers[l].in_dim..(o + 1) * layers[l].in_dim];
            for (g, a) in row.iter_mut().zip(&acts[l]) {
                *g += d * a;
            }
        }
        // Propagate to the previous hidden layer through the ReLU; the
        // derivative at exactly zero is taken as zero.
        if l > 0 {
            for j in 0..layers[l].in_dim {
                let mut s = 0.0;
                for o in 0..layers[l].out_dim {
                    s += layers[l].weights[o * layers[l].in_dim + j] * deltas[l][o];
                }
                deltas[l - 1][j] = if pre[l - 1][j] > 0.0 { s } else { 0.0 };
            }
        }
    }
    loss
}

struct AdamState {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    fn new(layers: &[Layer]) -> Self {
        AdamState {
            m_w: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            v_w: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            m_b: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            v_b: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [Layer], gw: &[Vec<f64>], gb: &[Vec<f64>], cfg: &MlpConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.adam_beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.adam_beta2.powi(self.t as i32);
        for l in 0..layers.len() {
            update(
                &mut layers[l].weights,
                &gw[l],
                &mut self.m_w[l],
                &mut self.v_w[l],
                cfg,
                bc1,
                bc2,
            );
            update(&mut layers[l].biases, &gb[l], &mut self.m_b[l], &mut self.v_b[l], cfg, bc1, bc2);
        }

        fn update(
            params: &mut [f64],
            grads: &[f64],
            m: &mut [f64],
            v: &mut [f64],
            cfg: &MlpConfig,
            bc1: f64,
            bc2: f64,
        ) {
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
                v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
            }
        }
    }
}

fn make_buffers(dims: &[usize]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let acts = dims.iter().map(|&d| vec![0.0; d]).collect();
    let pre = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
    let deltas = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
    (acts, pre, deltas)
}

/// Trains a regressor and returns it with the mean per-sample loss of each
/// epoch (m², measured as batches are visited).
pub fn train_traced(dataset: &Dataset, config: &MlpConfig) -> Result<(Mlp, Vec<f64>)> {
    config.validate()?;
    dataset.validate()?;
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid("training needs at least 2 samples"));
    }
    let standardizer = Standardizer::fit(&dataset.inputs);
    let std_inputs: Vec<[f64; INPUTS_PER_SAMPLE]> =
        dataset.inputs.iter().map(|x| standardizer.apply(x)).collect();

    let dims = network_dims(config);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut layers = init_layers(&dims, &mut rng)?;
    let mut adam = AdamState::new(&layers);
    let (mut acts, mut pre, mut deltas) = make_buffers(&dims);
    let mut gw: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut gb: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();

    let mut indices: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            for g in gw.iter_mut().chain(gb.iter_mut()) {
                g.fill(0.0);
            }
            for &i in chunk {
                forward_trace(&layers, &std_inputs[i], &mut acts, &mut pre);
                loss_sum += backward_accumulate(
                    &layers,
                    &acts,
                    &pre,
                    dataset.targets[i],
                    &mut deltas,
                    &mut gw,
                    &mut gb,
                );
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in gw.iter_mut().chain(gb.iter_mut()) {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            }
            adam.step(&mut layers, &gw, &gb, config);
        }
        epoch_losses.push(loss_sum / n as f64);
    }

    let model = Mlp { layers, standardizer, config: *config };
    model.validate()?;
    Ok((model, epoch_losses))
}

pub fn train(dataset: &Dataset, config: &MlpConfig) -> Result<Mlp> {
    train_traced(dataset, config).map(|(m, _)| m)
}

fn loss_at(layers: &[Layer], x: &[f64], target: Position) -> f64 {
    let mut a = x.to_vec();
    let last = layers.len() - 1;
    for (li, layer) in layers.iter().enumerate() {
        a = layer_forward(layer, &a, li < last);
    }
    let (dx, dy) = (a[0] - target.x, a[1] - target.y);
    dx * dx + dy * dy
}

/// Compares backprop gradients of `‖f(input) − target‖²` against central
/// differences over every parameter; returns the worst relative error.
/// Fails if any hidden pre-activation sits within the kink margin of zero,
/// where the ReLU derivative is unreliable. Gradient pairs below 1e-8 in
/// magnitude are treated as matching (finite differences are noise there).
pub fn gradient_check(
    model: &Mlp,
    input: &[f64; INPUTS_PER_SAMPLE],
    target: Position,
) -> Result<f64> {
    model.validate()?;
    if input.iter().any(|v| !v.is_finite()) || !target.is_finite() {
        return Err(Error::invalid("gradient check needs finite input and target"));
    }
    let x = model.standardizer.apply(input);
    let dims: Vec<usize> = std::iter::once(INPUTS_PER_SAMPLE)
        .chain(model.layers.iter().map(|l| l.out_dim))
        .collect();
    let (mut acts, mut pre, mut deltas) = make_buffers(&dims);
    forward_trace(&model.layers, &x, &mut acts, &mut pre);
    for layer_pre in &pre[..pre.len() - 1] {
        for &z in layer_pre {
            if z.abs() < GRADIENT_KINK_MARGIN {
                return Err(Error::KinkProximity { value: z, margin: GRADIENT_KINK_MARGIN });
            }
        }
    }

    let mut gw: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut gb: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();
    backward_accumulate(&model.layers, &acts, &pre, target, &mut deltas, &mut gw, &mut gb);

    let h = GRADIENT_CHECK_STEP;
    let mut layers = model.layers.clone();
    let mut max_rel = 0.0f64;
    for l in 0..layers.len() {
        for idx in 0..layers[l].weights.len() {
            let orig = layers[l].weights[idx];
            layers[l].weights[idx] = orig + h;
            let up = loss_at(&layers, &x, target);
            layers[l].weights[idx] = orig - h;
            let down = loss_at(&layers, &x, target);
            layers[l].weights[idx] = orig;
            max_rel = max_rel.max(rel_error(gw[l][idx], (up - down) / (2.0 * h)));
        }
        for idx in 0..layers[l].biases.len() {
            let orig = layers[l].biases[idx];
            layers[l].biases[idx] = orig + h;
            let up = loss_at(&layers, &x, target);
            layers[l].biases[idx] = orig - h;
            let down = loss_at(&layers, &x, target);
            layers[l].biases[idx] = orig;
            max_rel = max_rel.max(rel_error(gb[l][idx], (up - down) / (2.0 * h)));
        }
    }
    Ok(max_rel)
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom < 1e-8 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}
