//! One-dimensional probability densities.
//!
//! Every density exposes `pdf`, its derivative `dpdf`, `log_pdf`, `cdf` and
//! `quantile`, plus an *effective support*: the natural support for bounded
//! densities and `[quantile(1e−10), quantile(1 − 1e−10)]` on unbounded sides.
//! All integrals in this crate run over the effective support.

use std::f64::consts::{E, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::roots::solve_increasing;
use crate::{Error, Result};

/// Tail mass cut from each unbounded side of a support.
pub const TAIL_MASS: f64 = 1e-10;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(z).
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function Φ(z), accurate in the lower tail.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Φ⁻¹(u) for u in [0, 1].
pub fn std_normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * u)
}

/// A closed interval whose ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub const fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub const fn non_negative() -> Self {
        Interval { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Clips infinite ends to `±limit`.
    pub fn clipped(&self, limit: f64) -> Interval {
        Interval { lo: self.lo.max(-limit), hi: self.hi.min(limit) }
    }

    /// `count` uniformly spaced points including both (finite) ends.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        linspace(self.lo, self.hi, count)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `count` points from `lo` to `hi` inclusive; the last point is exactly `hi`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| if i + 1 == count { hi } else { lo + step * i as f64 }).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    weight: f64,
    mu: f64,
    sigma: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Mixture(Vec<Component>),
    Kde { samples: Arc<[f64]>, bandwidth: f64 },
    Truncated { base: Box<Density1D>, lo: f64, hi: f64, cdf_lo: f64, mass: f64 },
}

/// An immutable 1-D probability density.
#[derive(Debug, Clone)]
pub struct Density1D {
    kind: Kind,
    effective: Interval,
}

impl Density1D {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("gaussian mean must be finite, got {mu}")));
        }
        Ok(Self::finish(Kind::Gaussian { mu, sigma }))
    }

    pub fn standard_normal() -> Self {
        Self::finish(Kind::Gaussian { mu: 0.0, sigma: 1.0 })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::EmptyInterval { lo: a, hi: b });
        }
        Ok(Self::finish(Kind::Uniform { a, b }))
    }

    pub fn gaussian_mixture(weights: &[f64], mus: &[f64], sigmas: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.len() != mus.len() || weights.len() != sigmas.len() {
            return Err(Error::LengthMismatch(format!(
                "mixture needs equal non-empty lists, got {} weights, {} means, {} sigmas",
                weights.len(),
                mus.len(),
                sigmas.len()
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidConfig(format!("mixture weights must be positive, got {w}")));
        }
        if let Some(&s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::NonPositiveSigma(s));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::WeightSumMismatch(total));
        }
        let components = weights
            .iter()
            .zip(mus)
            .zip(sigmas)
            .map(|((&weight, &mu), &sigma)| Component { weight, mu, sigma })
            .collect();
        Ok(Self::finish(Kind::Mixture(components)))
    }

    /// Gaussian-kernel density estimate; `bandwidth = None` selects
    /// Silverman's rule of thumb.
    pub fn empirical_kde(samples: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(format!("kde sample {x}")));
        }
        let bandwidth = match bandwidth {
            Some(h) => h,
            None => silverman_bandwidth(samples),
        };
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::NonPositiveBandwidth(bandwidth));
        }
        Ok(Self::finish(Kind::Kde { samples: samples.into(), bandwidth }))
    }

    /// `base` conditioned on `[lo, hi]` (renormalised).
    pub fn truncated(base: Density1D, lo: f64, hi: f64) -> Result<Self> {
        let support = base.support();
        let lo = lo.max(support.lo);
        let hi = hi.min(support.hi);
        if !(lo < hi) {
            return Err(Error::EmptyInterval { lo, hi });
        }
        let cdf_lo = base.cdf(lo);
        let mass = base.cdf(hi) - cdf_lo;
        if !(mass > 0.0) {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Self::finish(Kind::Truncated { base: Box::new(base), lo, hi, cdf_lo, mass }))
    }

    fn finish(kind: Kind) -> Self {
        let mut d = Density1D { kind, effective: Interval::real_line() };
        let support = d.support();
        let lo = if support.lo.is_finite() { support.lo } else { d.quantile(TAIL_MASS) };
        let hi = if support.hi.is_finite() { support.hi } else { d.quantile(1.0 - TAIL_MASS) };
        d.effective = Interval { lo, hi };
        d
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Gaussian { .. } => "gaussian",
            Kind::Uniform { .. } => "uniform",
            Kind::Mixture(_) => "mixture",
            Kind::Kde { .. } => "kde",
            Kind::Truncated { .. } => "truncated",
        }
    }

    pub fn support(&self) -> Interval {
        match &self.kind {
            Kind::Uniform { a, b } => Interval { lo: *a, hi: *b },
            Kind::Truncated { lo, hi, .. } => Interval { lo: *lo, hi: *hi },
            _ => Interval::real_line(),
        }
    }

    /// Quadrature bounds: the support with unbounded sides cut at tail mass 1e−10.
    pub fn effective_support(&self) -> Interval {
        self.effective
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match self.kind {
            Kind::Kde { bandwidth, .. } => Some(bandwidth),
            _ => None,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mu, sigma } => std_normal_pdf((x - mu) / sigma) / sigma,
            Kind::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Kind::Mixture(cs) => cs.iter().map(|c| c.weight * std_normal_pdf((x - c.mu) / c.sigma) / c.sigma).sum(),
            Kind::Kde { samples, bandwidth } => {
                let s: f64 = samples.iter().map(|xi| std_normal_pdf((x - xi) / bandwidth)).sum();
                s / (samples.len() as f64 * bandwidth)
            }
            Kind::Truncated { base, lo, hi, mass, .. } => {
                if x >= *lo && x <= *hi {
                    base.pdf(x) / mass
                } else {
                    0.0
                }
            }
        }
    }

    pub fn dpdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                -z * std_normal_pdf(z) / (sigma * sigma)
            }
            Kind::Uniform { .. } => 0.0,
            Kind::Mixture(cs) => cs
                .iter()
                .map(|c| {
                    let z = (x - c.mu) / c.sigma;
                    -c.weight * z * std_normal_pdf(z) / (c.sigma * c.sigma)
                })
                .sum(),
            Kind::Kde { samples, bandwidth } => {
                let s: f64 = samples
                    .iter()
                    .map(|xi| {
                        let z = (x - xi) / bandwidth;
                        -z * std_normal_pdf(z)
                    })
                    .sum();
                s / (samples.len() as f64 * bandwidth * bandwidth)
            }
            Kind::Truncated { base, lo, hi, mass, .. } => {
                if x >= *lo && x <= *hi {
                    base.dpdf(x) / mass
                } else {
                    0.0
                }
            }
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln()
            }
            _ => self.pdf(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Kind::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Kind::Mixture(cs) => {
                cs.iter().map(|c| c.weight * std_normal_cdf((x - c.mu) / c.sigma)).sum::<f64>().min(1.0)
            }
            Kind::Kde { samples, bandwidth } => {
                let s: f64 = samples.iter().map(|xi| std_normal_cdf((x - xi) / bandwidth)).sum();
                (s / samples.len() as f64).min(1.0)
            }
            Kind::Truncated { base, lo, hi, cdf_lo, mass } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    ((base.cdf(x) - cdf_lo) / mass).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf); `u` is clamped to `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let support = self.support();
        if u <= 0.0 {
            return support.lo;
        }
        if u >= 1.0 {
            return support.hi;
        }
        match &self.kind {
            Kind::Gaussian { mu, sigma } => mu + sigma * std_normal_quantile(u),
            Kind::Uniform { a, b } => a + u * (b - a),
            Kind::Mixture(cs) => {
                let z = std_normal_quantile(u);
                let lo = cs.iter().map(|c| c.mu + c.sigma * z).fold(f64::INFINITY, f64::min);
                let hi = cs.iter().map(|c| c.mu + c.sigma * z).fold(f64::NEG_INFINITY, f64::max);
                self.solve_cdf(u, lo, hi)
            }
            Kind::Kde { samples, bandwidth } => {
                let z = bandwidth * std_normal_quantile(u);
                let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) + z;
                let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + z;
                self.solve_cdf(u, lo, hi)
            }
            Kind::Truncated { base, lo, hi, cdf_lo, mass } => base.quantile(cdf_lo + u * mass).clamp(*lo, *hi),
        }
    }

    fn solve_cdf(&self, u: f64, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return lo;
        }
        // the bracket is valid by construction: every component quantile
        // bounds the mixture quantile
        solve_increasing(|t| self.cdf(t), |t| self.pdf(t), u, lo, hi, 0.0).unwrap_or(0.5 * (lo + hi))
    }

    /// Closed-form differential entropy in nats (Gaussian and uniform only).
    pub fn entropy_analytic(&self) -> Result<f64> {
        match self.kind {
            Kind::Gaussian { sigma, .. } => Ok(0.5 * (2.0 * PI * E * sigma * sigma).ln()),
            Kind::Uniform { a, b } => Ok((b - a).ln()),
            _ => Err(Error::NoClosedForm(self.kind_name())),
        }
    }

    /// Compact description in the `kind:param,…` grammar.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Gaussian { mu, sigma } => format!("gaussian:{mu},{sigma}"),
            Kind::Uniform { a, b } => format!("uniform:{a},{b}"),
            Kind::Mixture(cs) => {
                let parts: Vec<String> = cs.iter().map(|c| format!("{},{},{}", c.weight, c.mu, c.sigma)).collect();
                format!("mixture:{}", parts.join(","))
            }
            Kind::Kde { samples, bandwidth } => format!("kde:n={},bandwidth={bandwidth}", samples.len()),
            Kind::Truncated { base, lo, hi, .. } => format!("truncated:{}@{lo}..{hi}", base.describe()),
        }
    }
}

/// Silverman's rule of thumb, `0.9·min(σ̂, IQR/1.34)·n^(−1/5)`.
///
/// Falls back to `σ̂` when the interquartile range is zero; returns 0 for
/// constant samples.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Parses plain-text samples: one decimal real per line, blank lines ignored.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| l.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: `{l}`: {e}", i + 1))))
        .collect()
}
