//! Numerical laboratory for the entropy-functional view of activation functions.
//!
//! An activation `f` with inverse branch `y = f⁻¹` maps an input density `p` to
//! the pushforward `q(x) = p(y(x))·y′(x)`. The differential entropy of `q`,
//! viewed as a functional of `y`, is maximised by the CDF-shaped activation
//! (WAFBC, the worst activation function with boundary conditions) and can
//! be decreased along the Euler–Lagrange correction field `η`. Applying that
//! correction to the positive branch of ReLU under a Gaussian input yields
//! CRReLU, `max(0, x) + ε·x·exp(−x²/2)`, with a learnable `ε`.
//!
//! Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`density`] | analytic and sample-derived 1-D densities |
//! | [`activation`] | activation zoo, CRReLU, monotone inverse branches |
//! | [`entropy`] | pushforward densities and three entropy estimators |
//! | [`variational`] | WAFBC, Euler–Lagrange checks, correction pipeline, CRReLU bounds |
//! | [`trainer`] | micro MLP with reverse-mode gradients and learnable `ε` |

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod density;
pub mod entropy;
mod error;
pub mod json;
pub mod quadrature;
pub mod roots;
pub mod trainer;
pub mod variational;

pub use activation::{Activation, ActivationKind, ActivationParams, InverseRepr, Provenance};
pub use density::{Density1D, Interval};
pub use entropy::{EntropyEstimate, EntropyMethod, PushforwardDensity};
pub use error::{Error, Result};
