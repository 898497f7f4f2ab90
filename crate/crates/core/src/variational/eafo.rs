//! Euler–Lagrange machinery for the entropy functional and the correction
//! pipeline `y → g = y + s·η → g⁻¹`.
//!
//! For `q = p(y)·y′` the Euler–Lagrange expression of the functional reduces
//! to `p(y)·y″/y′ + p′(y)·y′`; the correction field is its negative.
//! Along `g = y + s·η` the entropy changes at first order by `−s·∫η² dx`,
//! which [`entropy_descent_check`] measures by central differences.

use std::sync::Arc;

use serde::Serialize;

use crate::activation::inverse::{scan_positive, ScalarFn};
use crate::activation::{InverseRepr, Provenance};
use crate::density::{Density1D, Interval};
use crate::entropy::{neg_q_log_q, EntropyEstimate, EntropyMethod};
use crate::quadrature::integrate;
use crate::roots::{bracket_increasing, solve_increasing};
use crate::{Error, Result};

/// Default perturbation scale `s`.
pub const DEFAULT_SCALE: f64 = 1e-3;
/// Default residual tolerance of [`numeric_invert`].
pub const DEFAULT_INVERT_TOL: f64 = 1e-12;

const ETA_STEP: f64 = 1e-4;

fn check_in_domain(inv: &InverseRepr, x: f64) -> Result<()> {
    if inv.domain().contains(x) {
        Ok(())
    } else {
        Err(Error::DomainMismatch(format!("x = {x} outside inverse domain {}", inv.domain())))
    }
}

/// `p(y)·y″/y′ + p′(y)·y′` at `x`.
pub fn el_residual(p: &Density1D, inv: &InverseRepr, x: f64) -> Result<f64> {
    check_in_domain(inv, x)?;
    let t = inv.y(x);
    let (d1, d2) = (inv.dy(x), inv.d2y(x));
    Ok(p.pdf(t) * d2 / d1 + p.dpdf(t) * d1)
}

/// Relative spread of the first integral `y′(x)·p(y(x))` over `grid`:
/// `max |product − mean| / mean`. Zero for a stationary inverse.
pub fn first_integral_check(p: &Density1D, inv: &InverseRepr, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("first-integral grid is empty".into()));
    }
    let mut products = Vec::with_capacity(grid.len());
    for &x in grid {
        check_in_domain(inv, x)?;
        products.push(inv.dy(x) * p.pdf(inv.y(x)));
    }
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::DomainMismatch(format!("first integral has non-positive mean {mean} on the grid")));
    }
    Ok(products.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean)
}

/// `G_{y′y′} = −p(y)/y′`; never positive, so the stationary point is a maximum.
pub fn legendre_value(p: &Density1D, inv: &InverseRepr, x: f64) -> Result<f64> {
    check_in_domain(inv, x)?;
    Ok(-p.pdf(inv.y(x)) / inv.dy(x))
}

/// Where the functional lives: the base's effective support intersected with
/// the branch (`z`), and its image under the activation (`x`).
fn functional_support(p: &Density1D, inv: &InverseRepr) -> Result<(Interval, Interval)> {
    let z = p.effective_support().intersect(&inv.branch()).ok_or_else(|| {
        Error::DomainMismatch(format!(
            "effective support {} does not meet branch {}",
            p.effective_support(),
            inv.branch()
        ))
    })?;
    let x = Interval { lo: inv.forward(z.lo), hi: inv.forward(z.hi) };
    if !(x.lo < x.hi) {
        return Err(Error::DomainMismatch(format!("degenerate image {x} of {z}")));
    }
    Ok((z, x))
}

/// The correction field `η(x) = −(p(y)·y″/y′ + p′(y)·y′)`.
#[derive(Clone)]
pub struct CorrectionField {
    eta: ScalarFn,
    domain: Interval,
    l2_norm_sq: f64,
}

impl std::fmt::Debug for CorrectionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrectionField")
            .field("domain", &self.domain)
            .field("l2_norm_sq", &self.l2_norm_sq)
            .finish_non_exhaustive()
    }
}

impl CorrectionField {
    pub fn eta(&self, x: f64) -> f64 {
        (self.eta)(x)
    }

    /// `η′` by central differences.
    pub fn deta(&self, x: f64) -> f64 {
        let h = ETA_STEP * x.abs().max(1.0);
        (self.eta(x + h) - self.eta(x - h)) / (2.0 * h)
    }

    /// `η″` by central differences.
    pub fn d2eta(&self, x: f64) -> f64 {
        let h = ETA_STEP * x.abs().max(1.0);
        (self.eta(x + h) - 2.0 * self.eta(x) + self.eta(x - h)) / (h * h)
    }

    /// Image of the base's effective support; `l2_norm_sq` integrates over it.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `∫ η² dx` over [`domain`](Self::domain).
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }
}

pub fn correction_term(p: &Density1D, inv: &InverseRepr) -> Result<CorrectionField> {
    let (_, domain) = functional_support(p, inv)?;
    let (y, dy, d2y, _) = inv.parts();
    let base = p.clone();
    let eta: ScalarFn = Arc::new(move |x: f64| {
        let t = y(x);
        if !x.is_finite() || !t.is_finite() {
            return 0.0;
        }
        let (d1, d2) = (dy(x), d2y(x));
        -(base.pdf(t) * d2 / d1 + base.dpdf(t) * d1)
    });
    let e = eta.clone();
    let l2_norm_sq = integrate(move |x| e(x).powi(2), domain.lo, domain.hi)?.value;
    Ok(CorrectionField { eta, domain, l2_norm_sq })
}

fn solve_on_domain(y: &dyn Fn(f64) -> f64, dy: &dyn Fn(f64) -> f64, domain: Interval, x: f64, tol: f64) -> Result<f64> {
    let lo = y(domain.lo);
    let hi = y(domain.hi);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfRange { target: x, lo, hi });
    }
    let (a, b) = bracket_increasing(y, x, domain.lo, domain.hi)?;
    solve_increasing(y, dy, x, a, b, tol)
}

/// Solves `g(t) = x` for `t` in `g`'s domain by bracketed, safeguarded Newton.
pub fn numeric_invert(g: &InverseRepr, x: f64, tol: f64) -> Result<f64> {
    solve_on_domain(&|t| g.y(t), &|t| g.dy(t), g.domain(), x, tol)
}

/// `g = y + s·η`, checked strictly increasing on the field's domain.
///
/// The returned representation evaluates its `forward` map (the optimised
/// activation) by [`numeric_invert`].
pub fn optimized_inverse(inv: &InverseRepr, field: &CorrectionField, s: f64) -> Result<InverseRepr> {
    if s == 0.0 {
        return Ok(inv.clone());
    }
    let (y, dy, d2y, _) = inv.parts();
    let f1 = field.clone();
    let f2 = field.clone();
    let f3 = field.clone();
    let (y1, dy1) = (y.clone(), dy.clone());
    let g: ScalarFn = Arc::new(move |x| y1(x) + s * f1.eta(x));
    let dg: ScalarFn = Arc::new(move |x| dy1(x) + s * f2.deta(x));
    let d2g = move |x| d2y(x) + s * f3.d2eta(x);

    scan_positive(&field.domain(), &[], |x| dg(x))?;

    let domain = inv.domain();
    let branch = Interval { lo: g(domain.lo), hi: g(domain.hi) };
    let (gf, dgf) = (g.clone(), dg.clone());
    let forward =
        move |t: f64| solve_on_domain(&|x| gf(x), &|x| dgf(x), domain, t, DEFAULT_INVERT_TOL).unwrap_or(f64::NAN);
    let (g0, dg0) = (g.clone(), dg.clone());
    Ok(InverseRepr::from_fns(domain, branch, move |x| g0(x), move |x| dg0(x), d2g, forward, Provenance::Numeric))
}

fn entropy_over(p: &Density1D, inv: &InverseRepr, z: Interval) -> Result<EntropyEstimate> {
    let x0 = inv.forward(z.lo);
    let x1 = inv.forward(z.hi);
    if !(x0.is_finite() && x1.is_finite() && x0 < x1) {
        return Err(Error::DomainMismatch(format!("cannot map {z} into the inverse domain (got [{x0}, {x1}])")));
    }
    let r = integrate(
        |x| {
            let t = inv.y(x);
            let d = inv.dy(x);
            if !(d > 0.0) {
                return f64::NAN;
            }
            neg_q_log_q(p.pdf(t) * d, p.log_pdf(t) + d.ln())
        },
        x0,
        x1,
    )?;
    Ok(EntropyEstimate {
        value: r.value,
        method: EntropyMethod::Quadrature,
        est_error: r.error.max(f64::EPSILON),
        n: r.evals,
    })
}

/// `−∫ q ln q` restricted to the branch, without renormalising `p`.
///
/// Equals `entropy_quadrature` when the effective support lies inside the
/// branch; for a half-line branch it is the functional of that branch alone.
pub fn branch_entropy(p: &Density1D, inv: &InverseRepr) -> Result<EntropyEstimate> {
    let (z, _) = functional_support(p, inv)?;
    entropy_over(p, inv, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentRecord {
    pub scale: f64,
    /// `(H(y + sη) − H(y − sη)) / 2s`.
    pub slope_fd: f64,
    pub eta_l2sq: f64,
    /// `+1` if `H(y + sη) < H(y)`, `−1` if `H(y − sη) < H(y)`, `0` if neither.
    pub descent_sign: i8,
    pub h_base: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    /// `|slope_fd| / eta_l2sq`, absent at stationary points.
    pub ratio: Option<f64>,
    /// Ratio within 5% of 1, or both quantities below 1e−5 at a stationary point.
    pub first_order_consistent: bool,
}

/// Threshold below which both the slope and `∫η²` count as vanishing.
pub const STATIONARY_TOL: f64 = 1e-5;

/// Central-difference slope of the branch entropy along `±s·η`.
pub fn entropy_descent_check(p: &Density1D, inv: &InverseRepr, s: f64) -> Result<DescentRecord> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidConfig(format!("perturbation scale must be positive, got {s}")));
    }
    let (z, _) = functional_support(p, inv)?;
    let field = correction_term(p, inv)?;
    let plus = optimized_inverse(inv, &field, s)?;
    let minus = optimized_inverse(inv, &field, -s)?;
    let h_base = entropy_over(p, inv, z)?.value;
    let h_plus = entropy_over(p, &plus, z)?.value;
    let h_minus = entropy_over(p, &minus, z)?.value;
    let slope_fd = (h_plus - h_minus) / (2.0 * s);
    let descent_sign = if h_plus < h_base && h_plus <= h_minus {
        1
    } else if h_minus < h_base {
        -1
    } else {
        0
    };
    let eta_l2sq = field.l2_norm_sq();
    let stationary = eta_l2sq <= STATIONARY_TOL && slope_fd.abs() <= STATIONARY_TOL;
    let ratio = (eta_l2sq > STATIONARY_TOL).then(|| slope_fd.abs() / eta_l2sq);
    let first_order_consistent = stationary || ratio.is_some_and(|r| (0.95..=1.05).contains(&r));
    Ok(DescentRecord {
        scale: s,
        slope_fd,
        eta_l2sq,
        descent_sign,
        h_base,
        h_plus,
        h_minus,
        ratio,
        first_order_consistent,
    })
}
