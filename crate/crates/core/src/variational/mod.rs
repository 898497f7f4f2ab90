//! Calculus-of-variations checks on the entropy functional
//! `H(y) = −∫ p(y(x))·y′(x)·ln(p(y(x))·y′(x)) dx`.
//!
//! - [`wafbc`]: the CDF-shaped stationary activation and its curve comparisons;
//! - [`eafo`]: Euler–Lagrange residual, first integral, Legendre value, the
//!   correction field `η`, the optimised inverse `y + s·η` and the
//!   first-order entropy descent check;
//! - [`crrelu`]: the approximate-inverse error bound for CRReLU, the bounded
//!   shape facts it relies on, and the end-to-end derivation.

pub mod crrelu;
pub mod eafo;
pub mod wafbc;

pub use crrelu::{derive_crrelu, fact_bounds_check, prop2_bound, prop2_check, FactExtremum, Prop2Record};
pub use eafo::{
    branch_entropy, correction_term, el_residual, entropy_descent_check, first_integral_check, legendre_value,
    numeric_invert, optimized_inverse, CorrectionField, DescentRecord, DEFAULT_INVERT_TOL, DEFAULT_SCALE,
};
pub use wafbc::{wafbc_curve, wafbc_curve_compare, wafbc_eval, CurveComparison, CurveRow, WafbcSpec};
