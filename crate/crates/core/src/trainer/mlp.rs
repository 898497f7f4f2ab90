use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::activation::{Activation, ActivationKind, ActivationParams};
use crate::density::Density1D;
use crate::variational::WafbcSpec;
use crate::{Error, Result};

/// RNG stream for weight initialisation; data shuffling uses its own stream.
pub(crate) const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    HeUniform,
    XavierUniform,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::HeUniform => "he_uniform",
            Init::XavierUniform => "xavier_uniform",
        })
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "he_uniform" => Ok(Init::HeUniform),
            "xavier_uniform" => Ok(Init::XavierUniform),
            _ => Err(Error::Parse(format!("unknown init `{s}` (expected he_uniform or xavier_uniform)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPConfig {
    pub layer_widths: Vec<usize>,
    pub activation: ActivationKind,
    pub params: ActivationParams,
    pub seed: u64,
    pub init: Init,
}

impl MLPConfig {
    /// Default parameters for `activation`, seed 0, He-uniform init.
    pub fn new(layer_widths: Vec<usize>, activation: ActivationKind) -> Self {
        MLPConfig {
            layer_widths,
            activation,
            params: ActivationParams::for_kind(activation),
            seed: 0,
            init: Init::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 layer widths, got {:?}", self.layer_widths)));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidConfig(format!("layer widths must be positive: {:?}", self.layer_widths)));
        }
        activation_for(self.activation, self.params).map(|_| ())
    }

    /// Number of activation layers (one per hidden layer).
    pub fn activation_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(2)
    }
}

/// Weights and biases of every layer, plus one learnable scalar per
/// activation layer for CRReLU and PReLU.
pub fn param_count(config: &MLPConfig) -> usize {
    let affine: usize = config.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let extra = if config.activation.has_learnable_param() { config.activation_layers() } else { 0 };
    affine + extra
}

/// The activation used in the network. WAFBC is the standard normal CDF.
pub(crate) fn activation_for(kind: ActivationKind, params: ActivationParams) -> Result<Activation> {
    match kind {
        ActivationKind::Wafbc => Ok(Activation::wafbc(WafbcSpec::new(Density1D::standard_normal(), 1.0, 0.0)?)),
        _ => Activation::from_kind(kind, params),
    }
}

/// Values kept by [`Mlp::forward`] for the backward pass and for probing.
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Tensor2>,
    pre: Vec<Tensor2>,
}

impl Cache {
    /// Pre-activations of each hidden layer.
    pub fn pre_activations(&self) -> &[Tensor2] {
        &self.pre
    }

    /// Post-activations of each hidden layer.
    pub fn post_activations(&self) -> &[Tensor2] {
        &self.inputs[1..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Tensor2>,
    pub biases: Vec<Vec<f64>>,
    /// One entry per activation layer when the kind has a learnable scalar.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MLPConfig,
    /// `weights[l]` is `in × out`.
    weights: Vec<Tensor2>,
    biases: Vec<Vec<f64>>,
    params: Vec<f64>,
}

impl Mlp {
    pub fn new(config: MLPConfig) -> Result<Self> {
        let mut m = Mlp::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(m.config.seed);
        rng.set_stream(INIT_STREAM);
        for w in &mut m.weights {
            let (fan_in, fan_out) = (w.rows() as f64, w.cols() as f64);
            let limit = match m.config.init {
                Init::HeUniform => (6.0 / fan_in).sqrt(),
                Init::XavierUniform => (6.0 / (fan_in + fan_out)).sqrt(),
            };
            for v in w.data_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(m)
    }

    /// All weights and biases zero; learnable scalars at their configured value.
    pub fn zeros(config: MLPConfig) -> Result<Self> {
        config.validate()?;
        let weights = config.layer_widths.windows(2).map(|w| Tensor2::zeros(w[0], w[1])).collect();
        let biases = config.layer_widths[1..].iter().map(|&n| vec![0.0; n]).collect();
        let init = activation_for(config.activation, config.params)?.learnable_param();
        let params = match init {
            Some(v) => vec![v; config.activation_layers()],
            None => Vec::new(),
        };
        Ok(Mlp { config, weights, biases, params })
    }

    pub fn config(&self) -> &MLPConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Tensor2] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Tensor2] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// Learned ε (CRReLU) or α (PReLU) per activation layer; empty otherwise.
    pub fn learnable_params(&self) -> &[f64] {
        &self.params
    }

    pub fn learnable_params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Tensor2], &mut [Vec<f64>], &mut [f64]) {
        (&mut self.weights, &mut self.biases, &mut self.params)
    }

    /// Activation of hidden layer `layer`, with its current learnable scalar.
    pub fn activation(&self, layer: usize) -> Activation {
        // validated at construction
        let a = activation_for(self.config.activation, self.config.params).expect("validated activation");
        match self.params.get(layer) {
            Some(&v) => a.with_learnable_param(v),
            None => a,
        }
    }

    pub fn forward(&self, batch: &Tensor2) -> Result<(Tensor2, Cache)> {
        if batch.cols() != self.config.layer_widths[0] {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                self.config.layer_widths[0]
            )));
        }
        let last = self.weights.len() - 1;
        let mut inputs = vec![batch.clone()];
        let mut pre = Vec::with_capacity(last);
        for l in 0..=last {
            let mut z = inputs[l].matmul(&self.weights[l])?;
            z.add_row(&self.biases[l])?;
            if l == last {
                z.check_finite("logits")?;
                return Ok((z, Cache { inputs, pre }));
            }
            let act = self.activation(l);
            let h = z.map(|v| act.value(v));
            h.check_finite("activation")?;
            pre.push(z);
            inputs.push(h);
        }
        unreachable!("loop returns at the output layer")
    }

    pub fn backward(&self, cache: &Cache, grad_logits: &Tensor2) -> Result<Gradients> {
        let last = self.weights.len() - 1;
        let out = *self.config.layer_widths.last().expect("validated widths");
        if grad_logits.rows() != cache.inputs[0].rows() || grad_logits.cols() != out {
            return Err(Error::ShapeMismatch(format!(
                "grad_logits is {}x{}, expected {}x{out}",
                grad_logits.rows(),
                grad_logits.cols(),
                cache.inputs[0].rows()
            )));
        }
        let mut weights = vec![Tensor2::zeros(0, 0); last + 1];
        let mut biases = vec![Vec::new(); last + 1];
        let mut params = vec![0.0; self.params.len()];
        let mut g = grad_logits.clone();
        for l in (0..=last).rev() {
            weights[l] = cache.inputs[l].t_matmul(&g)?;
            biases[l] = g.column_sums();
            if l == 0 {
                break;
            }
            let upstream = g.matmul_t(&self.weights[l])?;
            let z = &cache.pre[l - 1];
            let act = self.activation(l - 1);
            if let Some(p) = params.get_mut(l - 1) {
                *p = upstream.data().iter().zip(z.data()).map(|(u, &x)| u * act.dparam(x).unwrap_or(0.0)).sum();
            }
            let mut next = upstream;
            for (v, &x) in next.data_mut().iter_mut().zip(z.data()) {
                *v *= act.dvalue(x);
            }
            g = next;
        }
        Ok(Gradients { weights, biases, params })
    }

    pub fn predict(&self, batch: &Tensor2) -> Result<Vec<usize>> {
        let (logits, _) = self.forward(batch)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy and its gradient in the logits.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    if labels.len() != logits.rows() {
        return Err(Error::ShapeMismatch(format!("{} labels for {} rows", labels.len(), logits.rows())));
    }
    let n = logits.rows() as f64;
    let mut grad = Tensor2::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        if y >= logits.cols() {
            return Err(Error::ShapeMismatch(format!("label {y} with {} outputs", logits.cols())));
        }
        let row = logits.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - m).exp()).sum();
        let log_z = m + sum.ln();
        loss += log_z - row[y];
        for (c, &v) in row.iter().enumerate() {
            let p = (v - log_z).exp();
            grad.set(r, c, (p - if c == y { 1.0 } else { 0.0 }) / n);
        }
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::crrelu_eval;

    #[test]
    fn counts() {
        let relu = MLPConfig::new(vec![2, 16, 16, 2], ActivationKind::Relu);
        let cr = MLPConfig::new(vec![2, 16, 16, 2], ActivationKind::CrRelu);
        // 2·16+16 + 16·16+16 + 16·2+2
        assert_eq!(param_count(&relu), 354);
        assert_eq!(param_count(&cr), 356);
        for widths in [vec![3, 2], vec![4, 8, 3], vec![5, 7, 7, 7, 2]] {
            let a = MLPConfig::new(widths.clone(), ActivationKind::Relu);
            let b = MLPConfig::new(widths, ActivationKind::CrRelu);
            assert_eq!(param_count(&b) - param_count(&a), a.activation_layers());
        }
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let m = Mlp::zeros(MLPConfig::new(vec![3, 5, 2], ActivationKind::Gelu)).unwrap();
        let x = Tensor2::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        let (logits, _) = m.forward(&x).unwrap();
        assert!(logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_unit_crrelu() {
        let mut m = Mlp::zeros(MLPConfig::new(vec![1, 1, 1], ActivationKind::CrRelu)).unwrap();
        m.weights_mut()[0].set(0, 0, 1.0);
        m.weights_mut()[1].set(0, 0, 1.0);
        let (logits, _) = m.forward(&Tensor2::from_vec(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(logits.get(0, 0), crrelu_eval(1.0, 0.01));
        assert!((logits.get(0, 0) - 1.006_065_3).abs() < 1e-7);
    }

    #[test]
    fn rows_are_independent() {
        let m = Mlp::new(MLPConfig::new(vec![2, 4, 3], ActivationKind::Tanh)).unwrap();
        let x = Tensor2::from_vec(3, 2, vec![0.1, 0.2, -1.0, 2.0, 3.0, -0.5]).unwrap();
        let (a, _) = m.forward(&x).unwrap();
        let (b, _) = m.forward(&x.select_rows(&[2, 0, 1])).unwrap();
        assert_eq!(b.row(0), a.row(2));
        assert_eq!(b.row(1), a.row(0));
        assert_eq!(b.row(2), a.row(1));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = Mlp::new(MLPConfig::new(vec![2, 3, 2], ActivationKind::CrRelu)).unwrap();
        let x = Tensor2::from_vec(2, 2, vec![0.3, -0.7, 1.1, 0.4]).unwrap();
        let (_, cache) = m.forward(&x).unwrap();
        let g = m.backward(&cache, &Tensor2::zeros(2, 2)).unwrap();
        assert!(g.weights.iter().all(|w| w.data().iter().all(|&v| v == 0.0)));
        assert!(g.biases.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(g.params, vec![0.0]);
        assert!(m.backward(&cache, &Tensor2::zeros(3, 2)).is_err());
    }

    #[test]
    fn shape_and_config_errors() {
        let m = Mlp::new(MLPConfig::new(vec![2, 3, 2], ActivationKind::Relu)).unwrap();
        assert!(matches!(m.forward(&Tensor2::zeros(1, 3)), Err(Error::ShapeMismatch(_))));
        assert!(Mlp::new(MLPConfig::new(vec![2], ActivationKind::Relu)).is_err());
        assert!(Mlp::new(MLPConfig::new(vec![2, 0, 2], ActivationKind::Relu)).is_err());
    }

    #[test]
    fn cross_entropy_gradient_matches_differences() {
        let logits = Tensor2::from_vec(2, 3, vec![0.2, -1.0, 0.5, 2.0, 0.1, -0.3]).unwrap();
        let labels = [2, 0];
        let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            let mut p = logits.clone();
            p.data_mut()[i] += h;
            let mut q = logits.clone();
            q.data_mut()[i] -= h;
            let fd = (softmax_cross_entropy(&p, &labels).unwrap().0 - softmax_cross_entropy(&q, &labels).unwrap().0)
                / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8);
        }
    }
}
