//! Adaptive Simpson quadrature on finite intervals.

use crate::{Error, Result};

/// Absolute tolerance per initial panel.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Maximum bisection depth below an initial panel.
pub const MAX_DEPTH: u32 = 40;
const INITIAL_PANELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the Richardson error estimates of all accepted panels.
    pub error: f64,
    pub evals: usize,
}

/// Integrates `f` over `[a, b]` with the default tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Integral> {
    adaptive_simpson(f, a, b, DEFAULT_TOL, MAX_DEPTH)
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::DomainMismatch(format!("quadrature bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evals: 0 });
    }
    if a > b {
        let r = adaptive_simpson(f, b, a, tol, max_depth)?;
        return Ok(Integral { value: -r.value, ..r });
    }
    let mut state = State { f: &f, evals: 0, error: 0.0, max_depth };
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for k in 0..INITIAL_PANELS {
        let lo = a + h * k as f64;
        let hi = if k + 1 == INITIAL_PANELS { b } else { a + h * (k + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (state.eval(lo)?, state.eval(mid)?, state.eval(hi)?);
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total += state.refine(lo, hi, flo, fmid, fhi, whole, tol, 0)?;
    }
    Ok(Integral { value: total, error: state.error, evals: state.evals })
}

struct State<'a, F> {
    f: &'a F,
    evals: usize,
    error: f64,
    max_depth: u32,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue(format!("integrand is {v} at x = {x}")))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        // rounding floor: once the correction is at the level of f64 noise
        // further bisection cannot improve the estimate
        let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if delta.abs() <= 15.0 * tol || delta.abs() <= noise {
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.max_depth {
            return Err(Error::QuadratureNonConvergence { lo: a, hi: b, depth });
        }
        let l = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_gaussian() {
        let r = integrate(|x| x * x, 0.0, 3.0).unwrap();
        assert!((r.value - 9.0).abs() < 1e-12);
        let r = integrate(|x| (-x * x).exp(), -10.0, 10.0).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reversed_bounds_negate() {
        let f = |x: f64| x.sin();
        let a = integrate(f, 0.0, 2.0).unwrap().value;
        let b = integrate(f, 2.0, 0.0).unwrap().value;
        assert_eq!(a, -b);
    }

    #[test]
    fn depth_limit_reports_non_convergence() {
        let r = adaptive_simpson(|x: f64| x.abs().sqrt().recip().min(1e12), -1.0, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn nan_integrand_is_an_error() {
        assert!(integrate(|_| f64::NAN, 0.0, 1.0).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY).is_err());
    }
}
