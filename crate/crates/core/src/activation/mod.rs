//! Scalar activation functions and their monotone inverse branches.
//!
//! Conventions at non-smooth points: the ReLU subgradient at 0 is 0, so
//! `CRReLU′(0) = ε` and `PReLU′(0) = α`.

pub(crate) mod inverse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{std_normal_cdf, std_normal_pdf, Interval};
use crate::variational::WafbcSpec;
use crate::{Error, Result};

pub use inverse::{inverse_branch, InverseRepr, Provenance, MONOTONE_GRID};

/// Default CRReLU correction weight.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Identity,
    CrRelu,
    Relu,
    Gelu,
    Elu,
    Celu,
    Silu,
    Mish,
    Prelu,
    Sigmoid,
    Tanh,
    Wafbc,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 12] = [
        ActivationKind::Identity,
        ActivationKind::CrRelu,
        ActivationKind::Relu,
        ActivationKind::Gelu,
        ActivationKind::Elu,
        ActivationKind::Celu,
        ActivationKind::Silu,
        ActivationKind::Mish,
        ActivationKind::Prelu,
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::Wafbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::CrRelu => "crrelu",
            ActivationKind::Relu => "relu",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Elu => "elu",
            ActivationKind::Celu => "celu",
            ActivationKind::Silu => "silu",
            ActivationKind::Mish => "mish",
            ActivationKind::Prelu => "prelu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Wafbc => "wafbc",
        }
    }

    /// Whether the kind carries one learnable scalar per layer.
    pub fn has_learnable_param(self) -> bool {
        matches!(self, ActivationKind::CrRelu | ActivationKind::Prelu)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// Parameters shared by the parametric kinds; each kind reads only its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    pub epsilon: f64,
    pub alpha: f64,
}

impl Default for ActivationParams {
    fn default() -> Self {
        ActivationParams { epsilon: DEFAULT_EPSILON, alpha: 1.0 }
    }
}

impl ActivationParams {
    /// Defaults for a kind: ε = 0.01, α = 1 for ELU/CELU and 0.25 for PReLU.
    pub fn for_kind(kind: ActivationKind) -> Self {
        let alpha = if kind == ActivationKind::Prelu { 0.25 } else { 1.0 };
        ActivationParams { alpha, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub enum Activation {
    Identity,
    CrRelu {
        epsilon: f64,
    },
    Relu,
    Gelu,
    Elu {
        alpha: f64,
    },
    Celu {
        alpha: f64,
    },
    Silu,
    Mish,
    Prelu {
        alpha: f64,
    },
    Sigmoid,
    Tanh,
    Wafbc(Box<WafbcSpec>),
    /// `out_scale · inner(in_scale · x + in_shift) + out_shift`.
    Rescaled {
        inner: Box<Activation>,
        in_scale: f64,
        in_shift: f64,
        out_scale: f64,
        out_shift: f64,
    },
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 20.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// `x·exp(−x²/2)`, the CRReLU correction shape (0 at ±∞).
#[inline]
pub fn gauss_bump(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * (-0.5 * x * x).exp()
    }
}

/// `max(0, x) + ε·x·exp(−x²/2)`.
pub fn crrelu_eval(x: f64, epsilon: f64) -> f64 {
    x.max(0.0) + epsilon * gauss_bump(x)
}

/// `1{x>0} + ε·exp(−x²/2)·(1 − x²)`; equals ε at exactly 0.
pub fn crrelu_grad_x(x: f64, epsilon: f64) -> f64 {
    let step = if x > 0.0 { 1.0 } else { 0.0 };
    step + epsilon * (-0.5 * x * x).exp() * (1.0 - x * x)
}

/// `∂f/∂ε = x·exp(−x²/2)`, bounded by `e^(−1/2)` in absolute value.
pub fn crrelu_grad_eps(x: f64, _epsilon: f64) -> f64 {
    gauss_bump(x)
}

fn baseline(kind: ActivationKind, params: ActivationParams) -> Result<Activation> {
    match kind {
        ActivationKind::CrRelu | ActivationKind::Wafbc | ActivationKind::Identity => {
            Err(Error::UnknownKind(format!("{kind} is not a baseline activation")))
        }
        _ => Activation::from_kind(kind, params),
    }
}

/// Value of one of the baseline kinds (ReLU, GELU, ELU, CELU, SiLU, Mish,
/// PReLU, Sigmoid, Tanh).
pub fn baseline_eval(kind: ActivationKind, x: f64, params: ActivationParams) -> Result<f64> {
    Ok(baseline(kind, params)?.value(x))
}

pub fn baseline_grad_x(kind: ActivationKind, x: f64, params: ActivationParams) -> Result<f64> {
    Ok(baseline(kind, params)?.dvalue(x))
}

/// Derivative in α for the parametric baselines (PReLU, ELU, CELU).
pub fn baseline_grad_param(kind: ActivationKind, x: f64, params: ActivationParams) -> Result<f64> {
    baseline(kind, params)?.dparam(x).ok_or_else(|| Error::UnknownKind(format!("{kind} has no parameter")))
}

impl Activation {
    /// Builds any kind except WAFBC, which needs a base density.
    pub fn from_kind(kind: ActivationKind, params: ActivationParams) -> Result<Self> {
        let ActivationParams { epsilon, alpha } = params;
        if !epsilon.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite activation parameter in {params:?}")));
        }
        Ok(match kind {
            ActivationKind::Identity => Activation::Identity,
            ActivationKind::CrRelu => Activation::CrRelu { epsilon },
            ActivationKind::Relu => Activation::Relu,
            ActivationKind::Gelu => Activation::Gelu,
            ActivationKind::Elu => Activation::Elu { alpha },
            ActivationKind::Celu => {
                if alpha == 0.0 {
                    return Err(Error::InvalidConfig("celu alpha must be non-zero".into()));
                }
                Activation::Celu { alpha }
            }
            ActivationKind::Silu => Activation::Silu,
            ActivationKind::Mish => Activation::Mish,
            ActivationKind::Prelu => Activation::Prelu { alpha },
            ActivationKind::Sigmoid => Activation::Sigmoid,
            ActivationKind::Tanh => Activation::Tanh,
            ActivationKind::Wafbc => {
                return Err(Error::InvalidConfig("wafbc needs a base density; use Activation::wafbc".into()))
            }
        })
    }

    pub fn wafbc(spec: WafbcSpec) -> Self {
        Activation::Wafbc(Box::new(spec))
    }

    /// `scale · x + shift`.
    pub fn affine(scale: f64, shift: f64) -> Self {
        Activation::Identity.rescaled(1.0, 0.0, scale, shift)
    }

    pub fn rescaled(self, in_scale: f64, in_shift: f64, out_scale: f64, out_shift: f64) -> Self {
        Activation::Rescaled { inner: Box::new(self), in_scale, in_shift, out_scale, out_shift }
    }

    pub fn kind(&self) -> ActivationKind {
        match self {
            Activation::Identity => ActivationKind::Identity,
            Activation::CrRelu { .. } => ActivationKind::CrRelu,
            Activation::Relu => ActivationKind::Relu,
            Activation::Gelu => ActivationKind::Gelu,
            Activation::Elu { .. } => ActivationKind::Elu,
            Activation::Celu { .. } => ActivationKind::Celu,
            Activation::Silu => ActivationKind::Silu,
            Activation::Mish => ActivationKind::Mish,
            Activation::Prelu { .. } => ActivationKind::Prelu,
            Activation::Sigmoid => ActivationKind::Sigmoid,
            Activation::Tanh => ActivationKind::Tanh,
            Activation::Wafbc(_) => ActivationKind::Wafbc,
            Activation::Rescaled { inner, .. } => inner.kind(),
        }
    }

    pub fn params(&self) -> ActivationParams {
        let mut p = ActivationParams::for_kind(self.kind());
        match self {
            Activation::CrRelu { epsilon } => p.epsilon = *epsilon,
            Activation::Elu { alpha } | Activation::Celu { alpha } | Activation::Prelu { alpha } => p.alpha = *alpha,
            Activation::Rescaled { inner, .. } => return inner.params(),
            _ => {}
        }
        p
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::CrRelu { epsilon } => crrelu_eval(x, *epsilon),
            Activation::Relu => x.max(0.0),
            Activation::Gelu => {
                if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    x * std_normal_cdf(x)
                }
            }
            Activation::Elu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x.exp_m1()
                }
            }
            Activation::Celu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * (x / alpha).exp_m1()
                }
            }
            Activation::Silu => {
                if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    x * sigmoid(x)
                }
            }
            Activation::Mish => {
                if x == f64::NEG_INFINITY {
                    0.0
                } else {
                    x * softplus(x).tanh()
                }
            }
            Activation::Prelu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Wafbc(spec) => spec.eval(x),
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, out_shift } => {
                out_scale * inner.value(in_scale * x + in_shift) + out_shift
            }
        }
    }

    pub fn dvalue(&self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::CrRelu { epsilon } => crrelu_grad_x(x, *epsilon),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => std_normal_cdf(x) + x * std_normal_pdf(x),
            Activation::Elu { alpha } => {
                if x > 0.0 {
                    1.0
                } else {
                    alpha * x.exp()
                }
            }
            Activation::Celu { alpha } => {
                if x > 0.0 {
                    1.0
                } else {
                    (x / alpha).exp()
                }
            }
            Activation::Silu => {
                let s = sigmoid(x);
                s + x * s * (1.0 - s)
            }
            Activation::Mish => {
                let t = softplus(x).tanh();
                t + x * (1.0 - t * t) * sigmoid(x)
            }
            Activation::Prelu { alpha } => {
                if x > 0.0 {
                    1.0
                } else {
                    *alpha
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Wafbc(spec) => spec.c1 * spec.base.pdf(x),
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, .. } => {
                out_scale * in_scale * inner.dvalue(in_scale * x + in_shift)
            }
        }
    }

    /// Second derivative where a closed form is provided (all kinds except Mish).
    pub fn d2value(&self, x: f64) -> Option<f64> {
        Some(match self {
            Activation::Identity | Activation::Relu | Activation::Prelu { .. } => 0.0,
            Activation::CrRelu { epsilon } => epsilon * (-0.5 * x * x).exp() * (x * x * x - 3.0 * x),
            Activation::Gelu => std_normal_pdf(x) * (2.0 - x * x),
            Activation::Elu { alpha } => {
                if x > 0.0 {
                    0.0
                } else {
                    alpha * x.exp()
                }
            }
            Activation::Celu { alpha } => {
                if x > 0.0 {
                    0.0
                } else {
                    (x / alpha).exp() / alpha
                }
            }
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s))
            }
            Activation::Mish => return None,
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Wafbc(spec) => spec.c1 * spec.base.dpdf(x),
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, .. } => {
                out_scale * in_scale * in_scale * inner.d2value(in_scale * x + in_shift)?
            }
        })
    }

    /// Derivative in the kind's scalar parameter (ε for CRReLU, α for
    /// PReLU/ELU/CELU).
    pub fn dparam(&self, x: f64) -> Option<f64> {
        match self {
            Activation::CrRelu { .. } => Some(gauss_bump(x)),
            Activation::Prelu { .. } => Some(if x > 0.0 { 0.0 } else { x }),
            Activation::Elu { .. } => Some(if x > 0.0 { 0.0 } else { x.exp_m1() }),
            Activation::Celu { alpha } => Some(if x > 0.0 {
                0.0
            } else {
                let r = x / alpha;
                r.exp_m1() - r * r.exp()
            }),
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, .. } => {
                Some(out_scale * inner.dparam(in_scale * x + in_shift)?)
            }
            _ => None,
        }
    }

    /// The per-layer learnable scalar (CRReLU ε, PReLU α).
    pub fn learnable_param(&self) -> Option<f64> {
        match self {
            Activation::CrRelu { epsilon } => Some(*epsilon),
            Activation::Prelu { alpha } => Some(*alpha),
            Activation::Rescaled { inner, .. } => inner.learnable_param(),
            _ => None,
        }
    }

    /// A copy with the learnable scalar replaced; other kinds are returned unchanged.
    pub fn with_learnable_param(&self, value: f64) -> Activation {
        match self {
            Activation::CrRelu { .. } => Activation::CrRelu { epsilon: value },
            Activation::Prelu { .. } => Activation::Prelu { alpha: value },
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, out_shift } => Activation::Rescaled {
                inner: Box::new(inner.with_learnable_param(value)),
                in_scale: *in_scale,
                in_shift: *in_shift,
                out_scale: *out_scale,
                out_shift: *out_shift,
            },
            other => other.clone(),
        }
    }

    /// A copy with the parameter read by [`dparam`](Self::dparam) replaced.
    pub fn with_param(&self, value: f64) -> Activation {
        match self {
            Activation::Elu { .. } => Activation::Elu { alpha: value },
            Activation::Celu { .. } => Activation::Celu { alpha: value },
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, out_shift } => Activation::Rescaled {
                inner: Box::new(inner.with_param(value)),
                in_scale: *in_scale,
                in_shift: *in_shift,
                out_scale: *out_scale,
                out_shift: *out_shift,
            },
            other => other.with_learnable_param(value),
        }
    }

    /// Points where the first derivative is discontinuous.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Activation::Relu | Activation::Prelu { .. } | Activation::CrRelu { .. } => vec![0.0],
            Activation::Elu { alpha } if *alpha != 1.0 => vec![0.0],
            Activation::Rescaled { inner, in_scale, in_shift, .. } => {
                inner.kinks().into_iter().map(|k| (k - in_shift) / in_scale).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Points where `dvalue` attains interior extrema, added to the
    /// monotonicity grid scan.
    pub fn derivative_critical_points(&self) -> Vec<f64> {
        match self {
            Activation::CrRelu { .. } => vec![-(3f64.sqrt()), 0.0, 3f64.sqrt()],
            Activation::Rescaled { inner, in_scale, in_shift, .. } => {
                inner.derivative_critical_points().into_iter().map(|k| (k - in_shift) / in_scale).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Closed-form inverse of the increasing branch, where one exists.
    pub fn analytic_inverse(&self, x: f64) -> Option<f64> {
        match self {
            Activation::Identity => Some(x),
            Activation::Relu => (x >= 0.0).then_some(x),
            Activation::Prelu { alpha } => {
                if x >= 0.0 {
                    Some(x)
                } else {
                    (*alpha > 0.0).then(|| x / alpha)
                }
            }
            Activation::Elu { alpha } => {
                if x >= 0.0 {
                    Some(x)
                } else {
                    (*alpha > 0.0 && x > -alpha).then(|| (x / alpha).ln_1p())
                }
            }
            Activation::Celu { alpha } => {
                if x >= 0.0 {
                    Some(x)
                } else {
                    (*alpha > 0.0 && x > -alpha).then(|| alpha * (x / alpha).ln_1p())
                }
            }
            Activation::Sigmoid => Some((x / (1.0 - x)).ln()),
            Activation::Tanh => Some(x.atanh()),
            Activation::Wafbc(spec) => (spec.c1 > 0.0).then(|| spec.base.quantile((x - spec.c2) / spec.c1)),
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, out_shift } => {
                let t = inner.analytic_inverse((x - out_shift) / out_scale)?;
                Some((t - in_shift) / in_scale)
            }
            _ => None,
        }
    }

    /// Value at the end of an interval, taking limits at ±∞.
    pub fn value_at_end(&self, x: f64) -> f64 {
        if x.is_finite() {
            return self.value(x);
        }
        let v = self.value(x.signum() * 1e300);
        if v.abs() >= 1e299 {
            v.signum() * f64::INFINITY
        } else {
            v
        }
    }

    /// Image of an interval under an increasing activation.
    pub fn image(&self, domain: &Interval) -> Interval {
        Interval { lo: self.value_at_end(domain.lo), hi: self.value_at_end(domain.hi) }
    }

    /// Short description in the `kind:param,…` grammar.
    pub fn describe(&self) -> String {
        match self {
            Activation::CrRelu { epsilon } => format!("crrelu:epsilon={epsilon}"),
            Activation::Elu { alpha } => format!("elu:alpha={alpha}"),
            Activation::Celu { alpha } => format!("celu:alpha={alpha}"),
            Activation::Prelu { alpha } => format!("prelu:alpha={alpha}"),
            Activation::Wafbc(spec) => {
                format!("wafbc:{},c1={},c2={}", spec.base.describe(), spec.c1, spec.c2)
            }
            Activation::Rescaled { inner, in_scale, in_shift, out_scale, out_shift } => {
                if matches!(**inner, Activation::Identity) && *in_scale == 1.0 && *in_shift == 0.0 {
                    format!("affine:{out_scale},{out_shift}")
                } else {
                    format!("{out_scale}*{}({in_scale}*x+{in_shift})+{out_shift}", inner.describe())
                }
            }
            other => other.kind().name().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density1D;
    use proptest::prelude::*;

    fn zoo() -> Vec<Activation> {
        let mut v: Vec<Activation> = ActivationKind::ALL
            .into_iter()
            .filter(|k| *k != ActivationKind::Wafbc)
            .map(|k| Activation::from_kind(k, ActivationParams::for_kind(k)).unwrap())
            .collect();
        v.push(Activation::Elu { alpha: 0.7 });
        v.push(Activation::Celu { alpha: 1.8 });
        v.push(Activation::CrRelu { epsilon: 0.5 });
        v.push(Activation::wafbc(WafbcSpec::new(Density1D::standard_normal(), 1.0, 0.0).unwrap()));
        v.push(Activation::Tanh.rescaled(1.0, 0.0, 0.5, 0.5));
        v
    }

    fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
    }

    #[test]
    fn crrelu_examples() {
        assert_eq!(crrelu_eval(0.0, 0.5), 0.0);
        for x in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            assert_eq!(crrelu_eval(x, 0.0), f64::max(0.0, x));
        }
        // 1 + 0.01·e^(−1/2)
        assert!((crrelu_eval(1.0, 0.01) - 1.006_065_306_597_126_4).abs() < 1e-15);
        assert!((crrelu_eval(-1.0, 0.01) + 0.006_065_306_597_126_334).abs() < 1e-15);

        assert_eq!(crrelu_grad_x(1.0, 0.01), 1.0);
        assert_eq!(crrelu_grad_x(0.0, 0.01), 0.01);
        // 0.1·e^(−2)·(−3)
        assert!((crrelu_grad_x(-2.0, 0.1) + 0.040_600_584_970_983_81).abs() < 1e-15);

        assert_eq!(crrelu_grad_eps(0.0, 0.3), 0.0);
        assert!((crrelu_grad_eps(1.0, 0.3) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((crrelu_grad_eps(-1.0, 0.3) + 0.606_530_659_712_633_4).abs() < 1e-15);
    }

    #[test]
    fn baseline_examples() {
        let p = ActivationParams::default();
        assert_eq!(baseline_eval(ActivationKind::Sigmoid, 0.0, p).unwrap(), 0.5);
        for k in [ActivationKind::Gelu, ActivationKind::Silu, ActivationKind::Mish] {
            assert_eq!(baseline_eval(k, 0.0, p).unwrap(), 0.0);
        }
        // 1/(1+e^(−1))
        assert!((baseline_eval(ActivationKind::Silu, 1.0, p).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!(matches!(baseline_eval(ActivationKind::CrRelu, 0.0, p), Err(Error::UnknownKind(_))));
        assert_eq!(baseline_grad_param(ActivationKind::Prelu, -2.0, p).unwrap(), -2.0);
        assert!(baseline_grad_param(ActivationKind::Gelu, 1.0, p).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ActivationKind::ALL {
            assert_eq!(k.name().parse::<ActivationKind>().unwrap(), k);
        }
        assert!(matches!("swish".parse::<ActivationKind>(), Err(Error::UnknownKind(_))));
    }

    #[test]
    fn crrelu_sparsity_and_bound() {
        assert!(crrelu_eval(-10.0, 0.01).abs() < 1e-20);
        let bound = (-0.5f64).exp();
        for i in 0..=4000 {
            let x = -20.0 + 0.01 * i as f64;
            for eps in [-0.9, -0.01, 0.01, 0.5, 2.0] {
                let dev = (crrelu_eval(x, eps) - x.max(0.0)).abs();
                assert!(dev <= eps.abs() * bound * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn mish_overflow_branch() {
        let m = Activation::Mish;
        assert_eq!(m.value(1000.0), 1000.0);
        assert!(m.value(-1000.0).abs() < 1e-300);
        assert!(m.dvalue(50.0).is_finite());
    }

    #[test]
    fn infinite_ends() {
        let c = Activation::CrRelu { epsilon: 0.2 };
        assert_eq!(c.value_at_end(f64::INFINITY), f64::INFINITY);
        assert_eq!(c.value_at_end(f64::NEG_INFINITY), 0.0);
        assert_eq!(Activation::Sigmoid.image(&Interval::real_line()), Interval { lo: 0.0, hi: 1.0 });
        assert_eq!(Activation::Gelu.value_at_end(f64::NEG_INFINITY), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn dvalue_matches_finite_differences(x in -6.0f64..6.0, eps in -0.9f64..0.9, alpha in 0.2f64..2.0) {
            let mut acts = zoo();
            acts.push(Activation::CrRelu { epsilon: eps });
            acts.push(Activation::Prelu { alpha });
            acts.push(Activation::Elu { alpha });
            acts.push(Activation::Celu { alpha });
            let h = 1e-6;
            for a in &acts {
                if a.kinks().iter().any(|k| (x - k).abs() < 1e-4) {
                    continue;
                }
                let fd = (a.value(x + h) - a.value(x - h)) / (2.0 * h);
                prop_assert!(close(fd, a.dvalue(x), 1e-6, 1e-2), "{} x={} fd={} an={}", a.describe(), x, fd, a.dvalue(x));
                if let Some(d2) = a.d2value(x) {
                    let fd2 = (a.dvalue(x + h) - a.dvalue(x - h)) / (2.0 * h);
                    prop_assert!(close(fd2, d2, 1e-5, 1e-2), "{} x={} fd2={} an={}", a.describe(), x, fd2, d2);
                }
            }
        }

        #[test]
        fn dparam_matches_finite_differences(x in -6.0f64..6.0, eps in -0.9f64..0.9, alpha in 0.2f64..2.0) {
            let h = 1e-6;
            for a in [Activation::CrRelu { epsilon: eps }, Activation::Prelu { alpha }, Activation::Elu { alpha }, Activation::Celu { alpha }] {
                let p = a.params();
                let v = if a.kind() == ActivationKind::CrRelu { p.epsilon } else { p.alpha };
                let fd = (a.with_param(v + h).value(x) - a.with_param(v - h).value(x)) / (2.0 * h);
                let an = a.dparam(x).unwrap();
                prop_assert!(close(fd, an, 1e-6, 1e-2), "{} x={} fd={} an={}", a.describe(), x, fd, an);
            }
        }

        #[test]
        fn crrelu_is_relu_plus_weighted_eps_gradient(x in -50.0f64..50.0, eps in -3.0f64..3.0) {
            prop_assert_eq!(crrelu_eval(x, eps), x.max(0.0) + eps * crrelu_grad_eps(x, eps));
            prop_assert_eq!(crrelu_eval(x, 0.0), Activation::Relu.value(x));
        }
    }
}
