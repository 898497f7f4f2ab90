use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Activation;
use crate::density::Interval;
use crate::roots::{bracket_increasing, solve_increasing};
use crate::{Error, Result};

/// Number of uniformly spaced points in a monotonicity scan.
pub const MONOTONE_GRID: usize = 4096;
/// Infinite ends are clipped to this magnitude for grid scans.
pub(crate) const SCAN_LIMIT: f64 = 15.0;

pub(crate) type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Numeric,
}

/// A strictly increasing inverse branch `y = f⁻¹` with its first two
/// derivatives.
///
/// `domain` is where `y` is defined (the activation's output range on the
/// branch); `branch` is the range of `y` (the activation's input interval).
/// `forward` maps back from `branch` to `domain`.
#[derive(Clone)]
pub struct InverseRepr {
    domain: Interval,
    branch: Interval,
    y: ScalarFn,
    dy: ScalarFn,
    d2y: ScalarFn,
    forward: ScalarFn,
    dforward: ScalarFn,
    provenance: Provenance,
}

impl fmt::Debug for InverseRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InverseRepr")
            .field("domain", &self.domain)
            .field("branch", &self.branch)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl InverseRepr {
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns(
        domain: Interval,
        branch: Interval,
        y: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dy: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2y: impl Fn(f64) -> f64 + Send + Sync + 'static,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        provenance: Provenance,
    ) -> Self {
        let dy: ScalarFn = Arc::new(dy);
        let forward: ScalarFn = Arc::new(forward);
        let (d, fw) = (dy.clone(), forward.clone());
        InverseRepr {
            domain,
            branch,
            y: Arc::new(y),
            dy,
            d2y: Arc::new(d2y),
            forward,
            dforward: Arc::new(move |t| 1.0 / d(fw(t))),
            provenance,
        }
    }

    /// Replaces the default `1 / y′(forward(t))` with a direct derivative of
    /// the forward map.
    pub fn with_forward_derivative(mut self, dforward: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dforward = Arc::new(dforward);
        self
    }

    /// The identity restricted to `branch`.
    pub fn identity(branch: Interval) -> Self {
        InverseRepr::from_fns(branch, branch, |x| x, |_| 1.0, |_| 0.0, |t| t, Provenance::Analytic)
    }

    pub fn y(&self, x: f64) -> f64 {
        (self.y)(x)
    }

    pub fn dy(&self, x: f64) -> f64 {
        (self.dy)(x)
    }

    pub fn d2y(&self, x: f64) -> f64 {
        (self.d2y)(x)
    }

    /// The activation on the branch: `forward(y(x)) = x`.
    pub fn forward(&self, t: f64) -> f64 {
        (self.forward)(t)
    }

    /// Derivative of the activation on the branch.
    pub fn dforward(&self, t: f64) -> f64 {
        (self.dforward)(t)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn branch(&self) -> Interval {
        self.branch
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub(crate) fn parts(&self) -> (ScalarFn, ScalarFn, ScalarFn, ScalarFn) {
        (self.y.clone(), self.dy.clone(), self.d2y.clone(), self.forward.clone())
    }

    /// Scans `dy > 0` over the interior of `domain` (clipped to ±15 when unbounded).
    pub fn check_monotone(&self) -> Result<()> {
        scan_positive(&self.domain, &[], |x| self.dy(x))
    }
}

/// Checks `deriv > 0` on a 4096-point grid over the interior of `domain`
/// plus any `extra` points inside it.
pub(crate) fn scan_positive(domain: &Interval, extra: &[f64], deriv: impl Fn(f64) -> f64) -> Result<()> {
    let clipped = domain.clipped(SCAN_LIMIT);
    let mut grid = clipped.grid(MONOTONE_GRID);
    // one-sided at the ends: the derivative is only required on the interior
    if let Some(first) = grid.first_mut() {
        *first = first.next_up();
    }
    if let Some(last) = grid.last_mut() {
        *last = last.next_down();
    }
    grid.extend(extra.iter().copied().filter(|x| x > &domain.lo && x < &domain.hi));
    for x in grid {
        let d = deriv(x);
        if !(d > 0.0) {
            return Err(Error::NonMonotone { at: x, derivative: d });
        }
    }
    Ok(())
}

/// Inverse of `a` restricted to `branch`, after checking strict monotonicity.
///
/// `dy = 1/f′(y)` and `d2y = −f″(y)/f′(y)³`; `f″` falls back to central
/// differences of `f′` when the activation has no closed form for it.
pub fn inverse_branch(a: &Activation, branch: Interval) -> Result<InverseRepr> {
    scan_positive(&branch, &a.derivative_critical_points(), |x| a.dvalue(x))?;
    let domain = a.image(&branch);
    if !(domain.lo < domain.hi) {
        return Err(Error::DomainMismatch(format!("empty image {domain} of branch {branch}")));
    }

    let probe = domain.clipped(SCAN_LIMIT).grid(5);
    let analytic_y = probe[1..4].iter().all(|&x| a.analytic_inverse(x).is_some_and(f64::is_finite));
    let analytic_d2 = a.d2value(0.5).is_some();

    let inner: ScalarFn = if analytic_y {
        let act = a.clone();
        Arc::new(move |x| act.analytic_inverse(x).unwrap_or(f64::NAN))
    } else {
        let act = a.clone();
        Arc::new(move |x| numeric_branch_inverse(&act, &branch, x))
    };
    // the ends of the image map to the ends of the branch
    let y: ScalarFn = Arc::new(move |x| {
        if x <= domain.lo {
            branch.lo
        } else if x >= domain.hi {
            branch.hi
        } else {
            inner(x)
        }
    });

    // at a closed end of the branch use the one-sided derivative from inside
    let inside = move |t: f64| {
        if t <= branch.lo {
            branch.lo.next_up()
        } else if t >= branch.hi {
            branch.hi.next_down()
        } else {
            t
        }
    };
    let act = a.clone();
    let y1 = y.clone();
    let dy = move |x: f64| 1.0 / act.dvalue(inside(y1(x)));
    let act = a.clone();
    let y2 = y.clone();
    let d2y = move |x: f64| {
        let t = inside(y2(x));
        let d1 = act.dvalue(t);
        let d2 = act.d2value(t).unwrap_or_else(|| {
            let h = 1e-5 * t.abs().max(1.0);
            (act.dvalue(t + h) - act.dvalue(t - h)) / (2.0 * h)
        });
        -d2 / (d1 * d1 * d1)
    };
    let act = a.clone();
    let forward = move |t: f64| act.value(t);
    let act = a.clone();
    let dforward = move |t: f64| act.dvalue(inside(t));
    let provenance = if analytic_y && analytic_d2 { Provenance::Analytic } else { Provenance::Numeric };
    let y3 = y.clone();
    Ok(InverseRepr::from_fns(domain, branch, move |x| y3(x), dy, d2y, forward, provenance)
        .with_forward_derivative(dforward))
}

fn numeric_branch_inverse(a: &Activation, branch: &Interval, x: f64) -> f64 {
    let f = |t: f64| a.value(t);
    let Ok((lo, hi)) = bracket_increasing(f, x, branch.lo, branch.hi) else {
        return f64::NAN;
    };
    solve_increasing(f, |t| a.dvalue(t), x, lo, hi, 0.0).unwrap_or(f64::NAN)
}
