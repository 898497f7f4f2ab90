use std::fmt::Write as _;

use serde::Serialize;

use crate::activation::{inverse_branch, Activation, InverseRepr};
use crate::density::{linspace, Density1D, Interval};
use crate::json::fmt17;
use crate::{Error, Result};

/// `f(x) = c1·CDF_p(x) + c2`: the stationary point of the entropy functional
/// under the boundary values `c2` and `c1 + c2`.
#[derive(Debug, Clone)]
pub struct WafbcSpec {
    pub base: Density1D,
    pub c1: f64,
    pub c2: f64,
}

impl WafbcSpec {
    pub fn new(base: Density1D, c1: f64, c2: f64) -> Result<Self> {
        if c1 == 0.0 || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "wafbc needs finite c1 != 0 and finite c2, got c1={c1}, c2={c2}"
            )));
        }
        Ok(WafbcSpec { base, c1, c2 })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c1 * self.base.cdf(x) + self.c2
    }

    /// Range `(c2, c1 + c2)` for increasing specs.
    pub fn range(&self) -> Interval {
        let (a, b) = (self.c2, self.c1 + self.c2);
        Interval { lo: a.min(b), hi: a.max(b) }
    }

    pub fn activation(&self) -> Activation {
        Activation::wafbc(self.clone())
    }

    /// Inverse over the base's support: `y = quantile((x − c2)/c1)`.
    pub fn inverse(&self) -> Result<InverseRepr> {
        inverse_branch(&self.activation(), self.base.support())
    }
}

pub fn wafbc_eval(spec: &WafbcSpec, x: f64) -> f64 {
    spec.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub x: f64,
    pub wafbc: f64,
    pub reference: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveComparison {
    pub reference: String,
    pub rows: Vec<CurveRow>,
    /// `max |wafbc − reference|` over the grid.
    pub sup_norm: f64,
    /// Grid point where the sup-norm is attained.
    pub argmax: f64,
}

impl CurveComparison {
    /// CSV with header `x,wafbc,reference,diff`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,wafbc,reference,diff\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", fmt17(r.x), fmt17(r.wafbc), fmt17(r.reference), fmt17(r.diff));
        }
        out
    }
}

/// Two-column curve table (`x,wafbc`) without a reference.
pub fn wafbc_curve(spec: &WafbcSpec, lo: f64, hi: f64, count: usize) -> Result<String> {
    check_grid(lo, hi, count)?;
    let mut out = String::from("x,wafbc\n");
    for x in linspace(lo, hi, count) {
        let _ = writeln!(out, "{},{}", fmt17(x), fmt17(spec.eval(x)));
    }
    Ok(out)
}

fn check_grid(lo: f64, hi: f64, count: usize) -> Result<()> {
    if count < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("grid needs finite lo < hi and count >= 2, got {lo}:{hi}:{count}")));
    }
    Ok(())
}

/// Tabulates the WAFBC against `reference` on `count` points of `[lo, hi]`.
pub fn wafbc_curve_compare(
    spec: &WafbcSpec,
    reference: &Activation,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<CurveComparison> {
    check_grid(lo, hi, count)?;
    let rows: Vec<CurveRow> = linspace(lo, hi, count)
        .into_iter()
        .map(|x| {
            let w = spec.eval(x);
            let r = reference.value(x);
            CurveRow { x, wafbc: w, reference: r, diff: w - r }
        })
        .collect();
    let (argmax, sup_norm) =
        rows.iter().map(|r| (r.x, r.diff.abs())).fold((lo, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(CurveComparison { reference: reference.describe(), rows, sup_norm, argmax })
}
