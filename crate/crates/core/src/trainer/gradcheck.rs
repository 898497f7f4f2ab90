//! Central finite-difference check of [`Mlp::backward`].

use serde::Serialize;

use super::mlp::{softmax_cross_entropy, Mlp};
use super::tensor::Tensor2;
use crate::Result;

/// Gradients below this magnitude are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `weights[l][i]`, `biases[l][i]` or `params[l]`.
    pub worst: String,
}

fn loss(model: &Mlp, x: &Tensor2, labels: &[usize]) -> Result<f64> {
    let (logits, _) = model.forward(x)?;
    Ok(softmax_cross_entropy(&logits, labels)?.0)
}

/// Compares analytic cross-entropy gradients against central differences with
/// step `h` for every weight, bias and learnable scalar.
///
/// The relative error is `|a − fd| / max(|a|, |fd|, GRAD_FLOOR)`.
pub fn gradient_check(model: &Mlp, x: &Tensor2, labels: &[usize], h: f64) -> Result<GradCheck> {
    let (logits, cache) = model.forward(x)?;
    let (_, g_logits) = softmax_cross_entropy(&logits, labels)?;
    let grads = model.backward(&cache, &g_logits)?;
    let mut report = GradCheck { checked: 0, max_rel_error: 0.0, worst: String::new() };
    let mut record = |name: String, analytic: f64, fd: f64| {
        let err = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(GRAD_FLOOR);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_empty() {
            report.max_rel_error = err;
            report.worst = name;
        }
    };
    let mut probe = model.clone();
    for l in 0..model.weights().len() {
        for i in 0..model.weights()[l].data().len() {
            let v = model.weights()[l].data()[i];
            probe.weights_mut()[l].data_mut()[i] = v + h;
            let up = loss(&probe, x, labels)?;
            probe.weights_mut()[l].data_mut()[i] = v - h;
            let down = loss(&probe, x, labels)?;
            probe.weights_mut()[l].data_mut()[i] = v;
            record(format!("weights[{l}][{i}]"), grads.weights[l].data()[i], (up - down) / (2.0 * h));
        }
        for i in 0..model.biases()[l].len() {
            let v = model.biases()[l][i];
            probe.biases_mut()[l][i] = v + h;
            let up = loss(&probe, x, labels)?;
            probe.biases_mut()[l][i] = v - h;
            let down = loss(&probe, x, labels)?;
            probe.biases_mut()[l][i] = v;
            record(format!("biases[{l}][{i}]"), grads.biases[l][i], (up - down) / (2.0 * h));
        }
    }
    for l in 0..model.learnable_params().len() {
        let v = model.learnable_params()[l];
        probe.learnable_params_mut()[l] = v + h;
        let up = loss(&probe, x, labels)?;
        probe.learnable_params_mut()[l] = v - h;
        let down = loss(&probe, x, labels)?;
        probe.learnable_params_mut()[l] = v;
        record(format!("params[{l}]"), grads.params[l], (up - down) / (2.0 * h));
    }
    Ok(report)
}

/// Rows of `x` whose hidden pre-activations all stay at least `margin` away
/// from the activation's kinks.
pub fn rows_away_from_kinks(model: &Mlp, x: &Tensor2, margin: f64) -> Result<Vec<usize>> {
    let (_, cache) = model.forward(x)?;
    let mut keep = Vec::new();
    'rows: for r in 0..x.rows() {
        for (l, z) in cache.pre_activations().iter().enumerate() {
            let kinks = model.activation(l).kinks();
            if z.row(r).iter().any(|v| kinks.iter().any(|k| (v - k).abs() < margin)) {
                continue 'rows;
            }
        }
        keep.push(r);
    }
    Ok(keep)
}
