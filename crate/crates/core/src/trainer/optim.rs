use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Parse(format!("unknown optimizer `{s}` (expected sgd or adam)"))),
        }
    }
}

/// Optimiser state over the parameter groups of an [`Mlp`]: each layer's
/// weights, each layer's biases, then the learnable activation scalars.
///
/// Weight decay is decoupled and touches weights only.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    weight_decay: f64,
    t: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn groups_mut(model: &mut Mlp) -> Vec<(&mut [f64], bool)> {
    let (w, b, p) = model.parts_mut();
    let mut out = Vec::with_capacity(w.len() + b.len() + 1);
    for t in w.iter_mut() {
        out.push((t.data_mut(), true));
    }
    for bias in b.iter_mut() {
        out.push((bias.as_mut_slice(), false));
    }
    out.push((p, false));
    out
}

fn grad_groups(g: &Gradients) -> Vec<&[f64]> {
    let mut out: Vec<&[f64]> = g.weights.iter().map(|t| t.data()).collect();
    out.extend(g.biases.iter().map(Vec::as_slice));
    out.push(&g.params);
    out
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, weight_decay: f64, model: &Mlp) -> Self {
        let mut shapes: Vec<usize> = model.weights().iter().map(|t| t.data().len()).collect();
        shapes.extend(model.biases().iter().map(Vec::len));
        shapes.push(model.learnable_params().len());
        let zeros: Vec<Vec<f64>> = shapes.iter().map(|&n| vec![0.0; n]).collect();
        let v = if kind == OptimizerKind::Adam { zeros.clone() } else { Vec::new() };
        let m = if kind == OptimizerKind::Adam { zeros } else { Vec::new() };
        Optimizer { kind, lr, weight_decay, t: 0, m, v }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let (lr, wd) = (self.lr, self.weight_decay);
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        let gs = grad_groups(grads);
        for (k, (params, decay)) in groups_mut(model).into_iter().enumerate() {
            let g = gs[k];
            for (i, p) in params.iter_mut().enumerate() {
                if decay && wd > 0.0 {
                    *p -= lr * wd * *p;
                }
                match self.kind {
                    OptimizerKind::Sgd => *p -= lr * g[i],
                    OptimizerKind::Adam => {
                        let m = &mut self.m[k][i];
                        let v = &mut self.v[k][i];
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g[i];
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}
