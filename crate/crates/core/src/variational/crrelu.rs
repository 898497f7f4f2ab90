//! CRReLU from the correction pipeline: approximate-inverse error bound,
//! the bounded-shape facts behind it, and the end-to-end derivation.

use serde::Serialize;

use super::eafo::correction_term;
use crate::activation::{crrelu_eval, gauss_bump, inverse_branch, Activation};
use crate::density::{linspace, std_normal_pdf, Density1D, Interval};
use crate::{Error, Result};

/// `e^(−1)·ε² + ½·e^(−3/2)·ε³`.
pub fn prop2_bound(epsilon: f64) -> f64 {
    (-1.0f64).exp() * epsilon.powi(2) + 0.5 * (-1.5f64).exp() * epsilon.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Record {
    pub epsilon: f64,
    pub max_error: f64,
    pub argmax: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Largest `|g(f(x)) − x|` on an evenly spaced grid over `[lo, hi]`, where
/// `f(x) = x + ε·x·e^(−x²/2)` and `g(x) = x − ε·x·e^(−x²/2)`.
pub fn prop2_check(epsilon: f64, lo: f64, hi: f64, count: usize) -> Result<Prop2Record> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidConfig(format!("bad grid [{lo}, {hi}] x {count}")));
    }
    let (mut max_error, mut argmax) = (0.0, lo);
    for x in linspace(lo, hi, count) {
        let f = x + epsilon * gauss_bump(x);
        let err = (f - epsilon * gauss_bump(f) - x).abs();
        if err > max_error {
            max_error = err;
            argmax = x;
        }
    }
    let bound = prop2_bound(epsilon);
    Ok(Prop2Record { epsilon, max_error, argmax, bound, holds: max_error <= bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactExtremum {
    pub function: &'static str,
    pub observed: f64,
    pub analytic: f64,
    pub location: f64,
}

const FACT_TOL: f64 = 1e-9;

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-12 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Maximises `|x·e^(−x²/2)|`, `x²·e^(−x²)` and `|x³·e^(−3x²/2)|` over
/// `[−10, 10]` and checks the extrema `e^(−1/2)`, `e^(−1)`, `e^(−3/2)` at `|x| = 1`.
pub fn fact_bounds_check() -> Result<Vec<FactExtremum>> {
    type Shape = fn(f64) -> f64;
    let facts: [(&'static str, Shape, f64); 3] = [
        ("|x*exp(-x^2/2)|", |x| gauss_bump(x).abs(), (-0.5f64).exp()),
        ("x^2*exp(-x^2)", |x| gauss_bump(x).powi(2), (-1.0f64).exp()),
        ("|x^3*exp(-3x^2/2)|", |x| gauss_bump(x).abs().powi(3), (-1.5f64).exp()),
    ];
    let grid = linspace(-10.0, 10.0, 200_001);
    let step = grid[1] - grid[0];
    let mut out = Vec::with_capacity(3);
    for (function, f, analytic) in facts {
        let mut best = grid[0];
        for &x in &grid {
            if f(x) > f(best) {
                best = x;
            }
        }
        let location = golden_max(f, best - step, best + step);
        let observed = f(location);
        if (observed - analytic).abs() > FACT_TOL || (location.abs() - 1.0).abs() > 1e-4 {
            return Err(Error::Verification(format!(
                "{function}: extremum {observed} at {location}, expected {analytic} at |x| = 1"
            )));
        }
        out.push(FactExtremum { function, observed, analytic, location });
    }
    Ok(out)
}

const DERIVE_GRID: usize = 10_001;
const DERIVE_TOL: f64 = 1e-12;

/// Builds CRReLU by running the correction pipeline for a standard normal
/// base on the positive ReLU branch.
///
/// The correction field there is `η(x) = x·φ(x)`. Normalising by `φ(0)` gives
/// the shape `x·e^(−x²/2)`; the perturbed inverse `g = x − ε·shape` is
/// inverted to first order as `f = 2x − g`, and the same shape is carried
/// over to the negative side on top of ReLU's zero. The result is checked
/// pointwise against [`crrelu_eval`] before being returned.
pub fn derive_crrelu(epsilon: f64) -> Result<Activation> {
    if !(epsilon.abs() < 1.0) {
        return Err(Error::EpsilonTooLarge(epsilon));
    }
    let p = Density1D::standard_normal();
    let branch = inverse_branch(&Activation::Relu, Interval::non_negative())?;
    let field = correction_term(&p, &branch)?;
    let peak = std_normal_pdf(0.0);
    let shape = |x: f64| {
        if x >= 0.0 {
            field.eta(x) / peak
        } else {
            -field.eta(-x) / peak
        }
    };
    let derived = |x: f64| {
        if x >= 0.0 {
            let g = x - epsilon * shape(x);
            2.0 * x - g
        } else {
            epsilon * shape(x)
        }
    };
    for x in linspace(-6.0, 6.0, DERIVE_GRID) {
        let (a, b) = (derived(x), crrelu_eval(x, epsilon));
        if (a - b).abs() > DERIVE_TOL {
            return Err(Error::Verification(format!("derived CRReLU differs at x = {x}: {a} vs {b}")));
        }
    }
    if epsilon == 0.0 {
        Ok(Activation::Relu)
    } else {
        Ok(Activation::CrRelu { epsilon })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    #[test]
    fn bound_values() {
        assert_eq!(prop2_bound(0.0), 0.0);
        // e^-1 = 0.36787944117144233, e^-1.5 = 0.22313016014842982
        let oracle = |e: f64| 0.367_879_441_171_442_33 * e * e + 0.5 * 0.223_130_160_148_429_82 * e * e * e;
        assert!((prop2_bound(0.01) - oracle(0.01)).abs() < 1e-18);
        assert!((prop2_bound(0.01) - 3.689_951e-5).abs() < 1e-11);
        assert!((prop2_bound(0.1) - 3.790_36e-3).abs() < 1e-8);
        assert!((prop2_bound(0.5) - 0.105_915_5).abs() < 1e-6);
    }

    #[test]
    fn check_examples() {
        let r = prop2_check(0.0, 0.0, 10.0, 100_001).unwrap();
        assert_eq!(r.max_error, 0.0);
        assert!(r.holds);
        for eps in [1e-3, 1e-2, 1e-1, 0.5] {
            let r = prop2_check(eps, 0.0, 10.0, 100_001).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn error_is_quadratic_in_epsilon() {
        for eps in [1e-3, 5e-3, 1e-2] {
            let a = prop2_check(eps, 0.0, 10.0, 100_001).unwrap().max_error;
            let b = prop2_check(2.0 * eps, 0.0, 10.0, 100_001).unwrap().max_error;
            let ratio = b / a;
            assert!((3.5..=4.5).contains(&ratio), "eps {eps}: ratio {ratio}");
        }
    }

    #[test]
    fn facts() {
        let f = fact_bounds_check().unwrap();
        assert_eq!(f.len(), 3);
        let expected = [0.606_530_659_712_633_4, 0.367_879_441_171_442_33, 0.223_130_160_148_429_82];
        for (rec, want) in f.iter().zip(expected) {
            assert!((rec.observed - want).abs() <= 1e-9, "{rec:?}");
            assert!((rec.location.abs() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn derivation() {
        assert_eq!(derive_crrelu(0.0).unwrap().kind(), ActivationKind::Relu);
        let a = derive_crrelu(0.01).unwrap();
        assert!((a.value(1.0) - 1.006_065_3).abs() < 1e-7);
        let b = derive_crrelu(0.5).unwrap();
        for x in linspace(-6.0, 6.0, 10_001) {
            let want = x.max(0.0) + 0.5 * x * (-0.5 * x * x).exp();
            assert!((b.value(x) - want).abs() <= 1e-12);
        }
        assert!(matches!(derive_crrelu(1.0), Err(Error::EpsilonTooLarge(_))));
        assert!(matches!(derive_crrelu(-1.5), Err(Error::EpsilonTooLarge(_))));
    }
}
