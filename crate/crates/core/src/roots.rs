//! Safeguarded Newton–bisection for strictly increasing scalar functions.
//!
//! Every iterate stays inside a shrinking bracket `[lo, hi]` with
//! `f(lo) ≤ target ≤ f(hi)`. A Newton step is taken when it lands strictly
//! inside the bracket, otherwise the bracket is bisected.

use crate::{Error, Result};

const MAX_ITER: usize = 500;

/// Solves `f(t) = target` for `t ∈ [lo, hi]` with `f` increasing.
///
/// Iteration stops when `|f(t) − target| ≤ tol` or when the bracket has
/// collapsed to adjacent floating-point values; in the latter case the
/// endpoint with the smaller residual is returned.
pub fn solve_increasing<F, D>(f: F, df: D, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || !target.is_finite() {
        return Err(Error::OutOfRange { target, lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo) - target;
    let fhi = f(hi) - target;
    if flo > fhi {
        return Err(Error::NonMonotone { at: lo, derivative: (fhi - flo) / (hi - lo) });
    }
    if flo.abs() <= tol {
        return Ok(lo);
    }
    if fhi.abs() <= tol {
        return Ok(hi);
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::OutOfRange { target, lo: flo + target, hi: fhi + target });
    }

    // start from the secant point, which is exact for affine f
    let mut t = lo - flo * (hi - lo) / (fhi - flo);
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for _ in 0..MAX_ITER {
        let ft = f(t) - target;
        if ft.abs() < best.1.abs() {
            best = (t, ft);
        }
        if ft.abs() <= tol {
            return Ok(polish(&f, &df, target, t, ft, lo, hi));
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = df(t);
        let newton = t - ft / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { mid };
        if next == t {
            break;
        }
        t = next;
    }
    Ok(best.0)
}

/// One extra Newton step, kept only if it lowers the residual.
fn polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, target: f64, t: f64, ft: f64, lo: f64, hi: f64) -> f64 {
    if ft == 0.0 {
        return t;
    }
    let cand = t - ft / df(t);
    if cand >= lo && cand <= hi && (f(cand) - target).abs() < ft.abs() {
        cand
    } else {
        t
    }
}

/// Grows a bracket around `target` for increasing `f` on `[dom_lo, dom_hi]`,
/// where either end may be infinite.
pub fn bracket_increasing<F>(f: F, target: f64, dom_lo: f64, dom_hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut lo = if dom_lo.is_finite() { dom_lo } else { dom_hi.min(0.0) - 1.0 };
    let mut hi = if dom_hi.is_finite() { dom_hi } else { dom_lo.max(0.0) + 1.0 };
    let mut step = 1.0;
    while f(lo) > target {
        if dom_lo.is_finite() || step > 1e300 {
            return Err(Error::OutOfRange { target, lo: f(lo), hi: f(hi) });
        }
        step *= 2.0;
        lo -= step;
    }
    step = 1.0;
    while f(hi) < target {
        if dom_hi.is_finite() || step > 1e300 {
            return Err(Error::OutOfRange { target, lo: f(lo), hi: f(hi) });
        }
        step *= 2.0;
        hi += step;
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let t = solve_increasing(|x| x * x * x, |x| 3.0 * x * x, 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((t - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn affine_is_exact_from_secant() {
        let t = solve_increasing(|x| 3.0 * x - 1.0, |_| 3.0, 2.0, -5.0, 5.0, 0.0).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_newton_derivative_falls_back_to_bisection() {
        // derivative lies about the slope; bisection still converges
        let t = solve_increasing(|x| x.powi(3) + x, |_| -1.0, 10.0, 0.0, 5.0, 1e-12).unwrap();
        assert!((t.powi(3) + t - 10.0).abs() <= 1e-12);
    }

    #[test]
    fn out_of_range_and_decreasing() {
        assert!(matches!(solve_increasing(|x| x, |_| 1.0, 3.0, 0.0, 1.0, 1e-12), Err(Error::OutOfRange { .. })));
        assert!(matches!(solve_increasing(|x| -x, |_| -1.0, 0.5, 0.0, 1.0, 1e-12), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn bracket_grows_on_unbounded_sides() {
        let (lo, hi) = bracket_increasing(|x| x, 100.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!(lo <= 100.0 && hi >= 100.0);
        let (lo, hi) = bracket_increasing(|x| x, -7.5, f64::NEG_INFINITY, 0.0).unwrap();
        assert!(lo <= -7.5 && hi == 0.0);
        assert!(bracket_increasing(|x| x, -1.0, 0.0, f64::INFINITY).is_err());
    }
}
