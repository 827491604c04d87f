//! Fully connected ReLU network with inverted dropout, trained with Adam on
//! mean squared error.
//!
//! Parameters live in one flat buffer. Layer `k` stores its weights
//! row-major as `out x in`, followed by its `out` biases. Gradients and Adam
//! moments use the same layout, so the optimizer never needs to know about
//! layers.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 16 features -> 128 -> 64 -> 32 -> 1.
pub const STANDARD_DIMS: [usize; 5] = [16, 128, 64, 32, 1];
pub const STANDARD_PARAM_COUNT: usize = 12_545;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

/// Number of scalars in a dense stack with the given layer widths.
pub fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Forward-pass mode. Training mode draws dropout masks from `rng`.
pub enum Mode<'a> {
    Infer,
    Train { rng: &'a mut ChaCha8Rng, dropout_p: f64 },
}

/// Activations kept by a batched forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    /// `acts[0]` is the input batch; `acts[k]` the output of hidden layer
    /// `k` after ReLU and dropout.
    pub acts: Vec<Vec<f64>>,
    /// Per hidden layer, the dropout scale of each unit (0 or `1/(1-p)`),
    /// absent in inference mode or when `p = 0`.
    pub masks: Vec<Option<Vec<f64>>>,
    /// Network outputs, one per sample.
    pub outputs: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("bad layer widths {dims:?}")));
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::invalid("the network must have a single output"));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// He-normal weights (variance `2 / fan_in`) and zero biases.
    pub fn he_init(dims: &[usize], seed: u64) -> Result<Self> {
        let mut net = Mlp::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..net.num_layers() {
            let fan_in = net.dims[k] as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
            for w in net.weights_mut(k) {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(net)
    }

    /// The standard 16-128-64-32-1 network, He-initialized.
    pub fn init_params(seed: u64) -> Self {
        let net = Mlp::he_init(&STANDARD_DIMS, seed).expect("standard dims are valid");
        assert_eq!(net.param_count(), STANDARD_PARAM_COUNT);
        net
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Mlp::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::ParamCountMismatch {
                found: params.len(),
                expected: net.params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offset(&self, layer: usize) -> usize {
        param_count(&self.dims[..=layer])
    }

    /// Byte ranges of a layer's weights and biases inside the flat buffer.
    pub fn layer_ranges(&self, layer: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start = self.offset(layer);
        let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
        let w_end = start + fan_in * fan_out;
        (start..w_end, w_end..w_end + fan_out)
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layer_ranges(layer).0]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.params[self.layer_ranges(layer).1]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layer_ranges(layer).0;
        &mut self.params[r]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layer_ranges(layer).1;
        &mut self.params[r]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `out[b][o] = bias[o] + W[o] . input[b]`
    fn affine(&self, layer: usize, input: &[f64], batch: usize) -> Vec<f64> {
        let (fan_in, fan_out) = (self.dims[layer], self.dims[layer + 1]);
        let w = self.weights(layer);
        let bias = self.biases(layer);
        let mut out = Vec::with_capacity(batch * fan_out);
        for row in input.chunks_exact(fan_in).take(batch) {
            for o in 0..fan_out {
                out.push(bias[o] + dot(&w[o * fan_in..(o + 1) * fan_in], row));
            }
        }
        out
    }

    /// Forward pass over `batch` row-major input rows.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize, mut mode: Mode<'_>) -> ForwardCache {
        assert_eq!(inputs.len(), batch * self.input_dim(), "input shape");
        let layers = self.num_layers();
        let mut acts = Vec::with_capacity(layers);
        let mut masks = Vec::with_capacity(layers - 1);
        acts.push(inputs.to_vec());
        for k in 0..layers - 1 {
            let mut h = self.affine(k, &acts[k], batch);
            for v in h.iter_mut() {
                *v = v.max(0.0);
            }
            let mask = match &mut mode {
                Mode::Train { rng, dropout_p } if *dropout_p > 0.0 => {
                    let keep = 1.0 / (1.0 - *dropout_p);
                    let m: Vec<f64> = (0..h.len())
                        .map(|_| if rng.gen::<f64>() < *dropout_p { 0.0 } else { keep })
                        .collect();
                    for (v, s) in h.iter_mut().zip(&m) {
                        *v *= s;
                    }
                    Some(m)
                }
                _ => None,
            };
            masks.push(mask);
            acts.push(h);
        }
        let outputs = self.affine(layers - 1, &acts[layers - 1], batch);
        ForwardCache {
            batch,
            acts,
            masks,
            outputs,
        }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> (f64, ForwardCache) {
        let cache = self.forward_batch(x, 1, mode);
        (cache.outputs[0], cache)
    }

    /// Inference-mode output for one input.
    pub fn predict(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim(), "input shape");
        let layers = self.num_layers();
        let mut h = x.to_vec();
        for k in 0..layers {
            let mut next = self.affine(k, &h, 1);
            if k + 1 < layers {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            h = next;
        }
        h[0]
    }

    /// Inference-mode outputs for many rows.
    pub fn predict_batch(&self, inputs: &[f64]) -> Vec<f64> {
        const CHUNK: usize = 512;
        let d = self.input_dim();
        inputs
            .chunks(CHUNK * d)
            .flat_map(|c| self.forward_batch(c, c.len() / d, Mode::Infer).outputs)
            .collect()
    }

    /// Propagates output sensitivities back through the cached pass.
    ///
    /// Returns parameter gradients and, when asked, gradients with respect
    /// to the inputs (row-major, same shape as the input batch).
    pub fn backprop(
        &self,
        cache: &ForwardCache,
        d_output: &[f64],
        want_input_grad: bool,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        assert_eq!(d_output.len(), cache.batch, "one output sensitivity per sample");
        let layers = self.num_layers();
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = d_output.to_vec();
        let mut input_grad = None;
        for k in (0..layers).rev() {
            let (fan_in, fan_out) = (self.dims[k], self.dims[k + 1]);
            let (w_range, b_range) = self.layer_ranges(k);
            let w = &self.params[w_range.clone()];
            let a_prev = &cache.acts[k];
            let need_prev = k > 0 || want_input_grad;
            let mut d_prev = if need_prev {
                vec![0.0; cache.batch * fan_in]
            } else {
                Vec::new()
            };
            {
                let (gw_all, gb_all) = grads.split_at_mut(b_range.start);
                let gw = &mut gw_all[w_range];
                let gb = &mut gb_all[..fan_out];
                for b in 0..cache.batch {
                    let a_row = &a_prev[b * fan_in..(b + 1) * fan_in];
                    for o in 0..fan_out {
                        let d = delta[b * fan_out + o];
                        if d == 0.0 {
                            continue;
                        }
                        gb[o] += d;
                        axpy(d, a_row, &mut gw[o * fan_in..(o + 1) * fan_in]);
                        if need_prev {
                            axpy(
                                d,
                                &w[o * fan_in..(o + 1) * fan_in],
                                &mut d_prev[b * fan_in..(b + 1) * fan_in],
                            );
                        }
                    }
                }
            }
            if k == 0 {
                if want_input_grad {
                    input_grad = Some(d_prev);
                }
                break;
            }
            // Through dropout and ReLU of hidden layer k. A unit is live iff
            // its post-dropout activation is positive.
            let h = &cache.acts[k];
            match &cache.masks[k - 1] {
                Some(mask) => {
                    for ((d, &a), &s) in d_prev.iter_mut().zip(h).zip(mask) {
                        *d = if a > 0.0 { *d * s } else { 0.0 };
                    }
                }
                None => {
                    for (d, &a) in d_prev.iter_mut().zip(h) {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
            }
            delta = d_prev;
        }
        (grads, input_grad)
    }

    /// Exact gradient of the batch MSE `mean((y_hat - y)^2)`, given residuals
    /// `y_hat - y` from the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, residuals: &[f64]) -> Vec<f64> {
        let scale = 2.0 / cache.batch as f64;
        let d: Vec<f64> = residuals.iter().map(|r| r * scale).collect();
        self.backprop(cache, &d, false).0
    }

    /// `d y_hat / d x` at one input, inference mode.
    pub fn input_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, cache) = self.forward(x, Mode::Infer);
        self.backprop(&cache, &[1.0], true).1.expect("requested")
    }
}

pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::invalid(format!(
            "loss needs equal non-empty lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, learning_rate: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout_p: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 256,
            dropout_p: 0.2,
            patience: 10,
            max_epochs: 200,
            seed: 0,
            hidden: STANDARD_DIMS[1..STANDARD_DIMS.len() - 1].to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid("dropout probability must be in [0, 1)"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Normalized inputs and targets, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if dim == 0 || x.len() != dim * y.len() {
            return Err(Error::invalid(format!(
                "{} inputs do not form {} rows of width {dim}",
                x.len(),
                y.len()
            )));
        }
        Ok(TrainingSet { dim, x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Mean training-mode MSE per epoch, normalized target space.
    pub train_loss: Vec<f64>,
    /// Inference-mode validation MSE per epoch.
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub wall_seconds: f64,
}

impl TrainReport {
    /// Equal loss trajectories, ignoring wall-clock time.
    pub fn same_run(&self, other: &TrainReport) -> bool {
        self.epochs_run == other.epochs_run
            && self.train_loss == other.train_loss
            && self.val_loss == other.val_loss
            && self.best_epoch == other.best_epoch
            && self.stopped_early == other.stopped_early
    }
}

pub fn evaluate_mse(net: &Mlp, set: &TrainingSet) -> f64 {
    let preds = net.predict_batch(&set.x);
    loss_mse(&preds, &set.y).expect("non-empty set")
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on
/// validation MSE. Returns the parameters of the best validation epoch.
///
/// Single-threaded; the outcome is a pure function of the data and config.
pub fn train(train: &TrainingSet, val: &TrainingSet, config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training and validation sets must be non-empty"));
    }
    if train.dim != val.dim {
        return Err(Error::invalid("training and validation widths differ"));
    }
    let mut dims = vec![train.dim];
    dims.extend(&config.hidden);
    dims.push(1);
    let net = Mlp::he_init(&dims, config.seed)?;
    train_from(net, train, val, config)
}

/// Like [`train`] but starting from the given parameters.
pub fn train_from(
    mut net: Mlp,
    train: &TrainingSet,
    val: &TrainingSet,
    config: &TrainConfig,
) -> Result<(Mlp, TrainReport)> {
    config.validate()?;
    if train.dim != net.input_dim() || val.dim != net.input_dim() {
        return Err(Error::invalid("data width does not match the network input"));
    }
    let started = Instant::now();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);

    let mut adam = AdamState::new(net.param_count());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch_x = Vec::with_capacity(config.batch_size * train.dim);
    let mut batch_y = Vec::with_capacity(config.batch_size);

    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sse = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.extend_from_slice(train.row(i));
                batch_y.push(train.y[i]);
            }
            let cache = net.forward_batch(
                &batch_x,
                chunk.len(),
                Mode::Train {
                    rng: &mut dropout_rng,
                    dropout_p: config.dropout_p,
                },
            );
            let residuals: Vec<f64> = cache
                .outputs
                .iter()
                .zip(&batch_y)
                .map(|(p, t)| p - t)
                .collect();
            epoch_sse += residuals.iter().map(|r| r * r).sum::<f64>();
            let grads = net.backward(&cache, &residuals);
            adam_step(net.params_mut(), &grads, &mut adam, config.learning_rate);
        }
        let tl = epoch_sse / train.len() as f64;
        let vl = evaluate_mse(&net, val);
        train_loss.push(tl);
        val_loss.push(vl);
        if !tl.is_finite() || !vl.is_finite() || !net.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        if vl < best_val {
            best_val = vl;
            best_epoch = epoch;
            best.params.copy_from_slice(&net.params);
        } else if epoch - best_epoch >= config.patience {
            stopped_early = true;
            break;
        }
    }

    let report = TrainReport {
        epochs_run: train_loss.len(),
        train_loss,
        val_loss,
        best_epoch,
        best_val_loss: best_val,
        stopped_early,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn standard_param_count() {
        assert_eq!(
            16 * 128 + 128 + 128 * 64 + 64 + 64 * 32 + 32 + 32 + 1,
            STANDARD_PARAM_COUNT
        );
        assert_eq!(param_count(&STANDARD_DIMS), STANDARD_PARAM_COUNT);
        assert_eq!(Mlp::init_params(3).param_count(), STANDARD_PARAM_COUNT);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = Mlp::init_params(42);
        assert_eq!(a, Mlp::init_params(42));
        assert_ne!(a, Mlp::init_params(43));
        for k in 0..a.num_layers() {
            assert!(a.biases(k).iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn he_variance_of_first_layer() {
        let mut sum_var = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let w = Mlp::init_params(seed).weights(0).to_vec();
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            sum_var += w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64;
        }
        let var = sum_var / seeds as f64;
        assert!((var - 2.0 / 16.0).abs() < 0.2 * 2.0 / 16.0, "variance {var}");
    }

    #[test]
    fn zero_network_predicts_zero() {
        let net = Mlp::zeros(&STANDARD_DIMS).unwrap();
        let x = [3.0; 16];
        assert_eq!(net.predict(&x), 0.0);
        assert_eq!(net.forward(&x, Mode::Infer).0, 0.0);
    }

    #[test]
    fn dead_first_layer_yields_output_bias() {
        let mut net = Mlp::init_params(1);
        for w in net.weights_mut(0) {
            *w = w.abs();
        }
        net.biases_mut(3)[0] = 0.75;
        let x = [-1.0; 16];
        let (y, cache) = net.forward(&x, Mode::Infer);
        assert!(cache.acts[1].iter().all(|&h| h == 0.0));
        assert_eq!(y, 0.75);
        assert_eq!(net.predict(&x), 0.75);

        // Nothing upstream of the dead layer receives gradient.
        let grads = net.backward(&cache, &[1.0]);
        let (w0, b0) = net.layer_ranges(0);
        assert!(grads[w0].iter().all(|&g| g == 0.0));
        assert!(grads[b0].iter().all(|&g| g == 0.0));
        let (_, b3) = net.layer_ranges(3);
        assert_eq!(grads[b3][0], 2.0);
    }

    #[test]
    fn infer_is_deterministic() {
        let net = Mlp::init_params(5);
        let x: Vec<f64> = (0..16).map(|i| i as f64 / 10.0 - 0.7).collect();
        assert_eq!(net.predict(&x), net.predict(&x));
        assert_eq!(net.predict(&x), net.forward(&x, Mode::Infer).0);
    }

    #[test]
    fn mse_values() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_relative_eq!(loss_mse(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap(), 5.0 / 3.0);
        assert!(loss_mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(loss_mse(&[], &[]).is_err());
    }

    #[test]
    fn zero_residuals_give_zero_gradients() {
        let net = Mlp::init_params(2);
        let x = vec![0.3; 32];
        let cache = net.forward_batch(&x, 2, Mode::Infer);
        let g = net.backward(&cache, &[0.0, 0.0]);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, 0.001);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn adam_unit_step_under_constant_gradient() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        let lr = 0.001;
        let mut last = p.clone();
        for step in 0..2000 {
            adam_step(&mut p, &[0.5, -3.0], &mut s, lr);
            if step > 1000 {
                assert_relative_eq!(last[0] - p[0], lr, max_relative = 1e-6);
                assert_relative_eq!(p[1] - last[1], lr, max_relative = 1e-6);
            }
            last = p.clone();
        }
    }

    #[test]
    fn dropout_is_inverted() {
        let mut net = Mlp::he_init(&[4, 8, 1], 3).unwrap();
        for b in net.biases_mut(0) {
            *b = 0.5;
        }
        let x = [0.2, -0.1, 0.4, 0.3];
        let infer = net.forward(&x, Mode::Infer).1.acts[1].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draws = 20_000;
        let mut mean = vec![0.0; infer.len()];
        for _ in 0..draws {
            let c = net.forward(&x, Mode::Train { rng: &mut rng, dropout_p: 0.2 });
            for (m, h) in mean.iter_mut().zip(&c.1.acts[1]) {
                *m += h / draws as f64;
            }
        }
        for (m, h) in mean.iter().zip(&infer) {
            if *h > 0.0 {
                assert!((m - h).abs() / h < 0.02, "{m} vs {h}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let base = TrainConfig::default();
        assert!(base.validate().is_ok());
        for bad in [
            TrainConfig { learning_rate: 0.0, ..base.clone() },
            TrainConfig { batch_size: 0, ..base.clone() },
            TrainConfig { dropout_p: 1.0, ..base.clone() },
            TrainConfig { patience: 0, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidInput(_))));
        }
    }
}
