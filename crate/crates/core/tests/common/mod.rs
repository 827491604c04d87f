#![allow(dead_code)]

use dlt_surrogate::nn::{loss_mse, Mlp, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct GradCheck {
    pub checked: usize,
    pub worst_relative: f64,
    pub failures: Vec<(usize, f64, f64)>,
}

fn batch_loss(net: &Mlp, x: &[f64], y: &[f64]) -> f64 {
    let cache = net.forward_batch(x, y.len(), Mode::Infer);
    loss_mse(&cache.outputs, y).unwrap()
}

/// Compares backprop against central differences for every parameter of a
/// small dropout-free network. A partial passes when
/// `|analytic - numeric| <= tol * max(|analytic|, |numeric|)`, with an
/// absolute floor of 1e-9 for partials that are zero on both sides.
pub fn gradient_check(dims: &[usize], seed: u64, batch: usize, eps: f64, tol: f64) -> GradCheck {
    let mut net = Mlp::he_init(dims, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    // Non-zero biases keep more units away from the ReLU kink.
    for p in net.params_mut().iter_mut().filter(|p| **p == 0.0) {
        *p = rng.gen_range(-0.3..0.3);
    }
    let x: Vec<f64> = (0..batch * dims[0]).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..batch).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let cache = net.forward_batch(&x, batch, Mode::Infer);
    let residuals: Vec<f64> = cache.outputs.iter().zip(&y).map(|(p, t)| p - t).collect();
    let analytic = net.backward(&cache, &residuals);

    let mut out = GradCheck {
        checked: 0,
        worst_relative: 0.0,
        failures: Vec::new(),
    };
    for (i, &a) in analytic.iter().enumerate() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + eps;
        let plus = batch_loss(&net, &x, &y);
        net.params_mut()[i] = orig - eps;
        let minus = batch_loss(&net, &x, &y);
        net.params_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let diff = (a - numeric).abs();
        let scale = a.abs().max(numeric.abs());
        out.checked += 1;
        if scale > 0.0 {
            out.worst_relative = out.worst_relative.max(diff / scale);
        }
        if diff > tol * scale && diff > 1e-9 {
            out.failures.push((i, a, numeric));
        }
    }
    out
}
