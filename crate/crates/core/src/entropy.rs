//! Differential entropy of densities pushed through activation branches.
//!
//! Three estimators cross-check each other:
//!
//! - [`entropy_quadrature`]: adaptive Simpson on `−∫ q ln q`, written in the
//!   base variable as `∫ p(z)·(ln f′(z) − ln p(z)) dz` over the effective support;
//! - [`entropy_mc`]: change of variables, `H(f(Z)) = H(Z) + E[ln f′(Z)]`;
//! - [`entropy_spacing`]: the Vasicek m-spacing estimator on raw samples.
//!
//! All values are in nats.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, InverseRepr};
use crate::density::{Density1D, Interval};
use crate::quadrature::integrate;
use crate::{Error, Result};

/// Densities at or below this value contribute nothing to `−q ln q`.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    Quadrature,
    MonteCarlo,
    Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Nats.
    pub value: f64,
    pub method: EntropyMethod,
    /// Quadrature error estimate or sampling standard error; always positive.
    pub est_error: f64,
    /// Integrand evaluations or sample count.
    pub n: usize,
}

fn positive_error(err: f64, value: f64) -> f64 {
    err.max(f64::EPSILON * value.abs().max(1.0))
}

/// Density of `f(Z)` for `Z ~ base`, `q(x) = p(y(x))·y′(x)`.
#[derive(Debug, Clone)]
pub struct PushforwardDensity {
    base: Density1D,
    inv: InverseRepr,
    support: Interval,
}

impl PushforwardDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.inv.domain().contains(x) {
            return 0.0;
        }
        let (t, d) = (self.inv.y(x), self.inv.dy(x));
        if !(t.is_finite() && d.is_finite()) {
            return 0.0;
        }
        self.base.pdf(t) * d
    }

    /// `ln q(x)`, evaluated through `log_pdf` of the base to avoid underflow.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let (t, d) = (self.inv.y(x), self.inv.dy(x));
        if !(self.inv.domain().contains(x) && t.is_finite() && d.is_finite()) {
            return f64::NEG_INFINITY;
        }
        self.base.log_pdf(t) + d.ln()
    }

    /// Image of the base's effective support.
    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn base(&self) -> &Density1D {
        &self.base
    }

    pub fn inverse(&self) -> &InverseRepr {
        &self.inv
    }
}

/// Pushes `p` through the activation whose inverse branch is `inv`.
///
/// Fails with `DomainMismatch` unless the effective support of `p` lies
/// inside the branch.
pub fn pushforward(p: &Density1D, inv: &InverseRepr) -> Result<PushforwardDensity> {
    let eff = p.effective_support();
    let branch = inv.branch();
    if !branch.contains_interval(&eff) {
        return Err(Error::DomainMismatch(format!(
            "effective support {eff} of {} is not inside the branch {branch}",
            p.describe()
        )));
    }
    let support = Interval { lo: inv.forward(eff.lo), hi: inv.forward(eff.hi) };
    if !(support.lo < support.hi) || !inv.domain().contains_interval(&support) {
        return Err(Error::DomainMismatch(format!(
            "image {support} of the effective support leaves the inverse domain {}",
            inv.domain()
        )));
    }
    Ok(PushforwardDensity { base: p.clone(), inv: inv.clone(), support })
}

/// `−q ln q` with the removable singularity at `q = 0` filled in.
pub(crate) fn neg_q_log_q(q: f64, log_q: f64) -> f64 {
    if q <= DENSITY_FLOOR {
        0.0
    } else {
        -q * log_q
    }
}

/// `H = −∫ q ln q dx` by adaptive Simpson.
///
/// Substituting `x = f(z)` turns the integral into
/// `∫ p(z)·(ln f′(z) − ln p(z)) dz` over the base's effective support. The
/// integrand stays smooth when `f` saturates, where `q` itself piles up
/// against the ends of its range.
pub fn entropy_quadrature(p: &Density1D, inv: &InverseRepr) -> Result<EntropyEstimate> {
    pushforward(p, inv)?;
    let s = p.effective_support();
    let r = integrate(
        |z| {
            let d = p.pdf(z);
            if d <= DENSITY_FLOOR {
                0.0
            } else {
                d * (inv.dforward(z).ln() - p.log_pdf(z))
            }
        },
        s.lo,
        s.hi,
    )?;
    Ok(EntropyEstimate {
        value: r.value,
        method: EntropyMethod::Quadrature,
        est_error: positive_error(r.error, r.value),
        n: r.evals,
    })
}

/// Uniform draw from the open interval (0, 1).
#[inline]
pub(crate) fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Per-worker random stream: the run seed with the worker index as ChaCha stream id.
pub(crate) fn substream(seed: u64, worker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker);
    rng
}

/// Inverse-cdf draws from `p`, split into `workers` substreams.
pub fn sample_density(p: &Density1D, n: usize, seed: u64, workers: usize) -> Vec<f64> {
    let chunks = chunk_sizes(n, workers);
    let mut out = Vec::with_capacity(n);
    for (w, &len) in chunks.iter().enumerate() {
        let mut rng = substream(seed, w as u64);
        out.extend((0..len).map(|_| p.quantile(open_unit(&mut rng))));
    }
    out
}

/// Draws `f(Z)` for `Z ~ p`.
pub fn sample_pushforward(p: &Density1D, f: &Activation, n: usize, seed: u64) -> Vec<f64> {
    sample_density(p, n, seed, 1).into_iter().map(|z| f.value(z)).collect()
}

fn chunk_sizes(n: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    (0..workers).map(|w| n / workers + usize::from(w < n % workers)).collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }
}

/// Entropy of the base density itself: closed form when available,
/// quadrature with the identity branch otherwise. Returns `(value, error)`.
pub fn base_entropy(p: &Density1D) -> Result<(f64, f64)> {
    match p.entropy_analytic() {
        Ok(h) => Ok((h, positive_error(0.0, h))),
        Err(Error::NoClosedForm(_)) => {
            let est = entropy_quadrature(p, &InverseRepr::identity(p.support()))?;
            Ok((est.value, est.est_error))
        }
        Err(e) => Err(e),
    }
}

/// Monte-Carlo change-of-variables estimate `H(Z) + (1/n)·Σ ln f′(zᵢ)`.
///
/// Samples are split across `workers` threads, each with its own ChaCha
/// stream; partial moments are merged in worker order, so the result is
/// bit-reproducible for a given `(seed, workers)`.
pub fn entropy_mc(p: &Density1D, f: &Activation, n: usize, seed: u64, workers: usize) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    crate::activation::inverse::scan_positive(&p.effective_support(), &f.derivative_critical_points(), |x| {
        f.dvalue(x)
    })?;
    let (h_base, h_err) = base_entropy(p)?;

    let chunks = chunk_sizes(n, workers);
    let partials: Vec<Result<Moments>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .enumerate()
            .map(|(w, &len)| {
                scope.spawn(move || {
                    let mut rng = substream(seed, w as u64);
                    let mut m = Moments::default();
                    for _ in 0..len {
                        let z = p.quantile(open_unit(&mut rng));
                        let d = f.dvalue(z);
                        if !(d > 0.0) {
                            return Err(Error::ZeroDerivativeSample { at: z, derivative: d });
                        }
                        m.push(d.ln());
                    }
                    Ok(m)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    let mut total = Moments::default();
    for part in partials {
        total = total.merge(part?);
    }
    let var = if total.count > 1 { total.m2 / (total.count - 1) as f64 } else { 0.0 };
    let se = (var / total.count as f64).sqrt();
    let value = h_base + total.mean;
    Ok(EntropyEstimate { value, method: EntropyMethod::MonteCarlo, est_error: positive_error(se + h_err, value), n })
}

/// Default spacing window, `round(√n)`.
pub fn default_window(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Vasicek m-spacing estimate
/// `(1/n)·Σ ln(n·(x₍ᵢ₊ₘ₎ − x₍ᵢ₋ₘ₎)/(2m))` with order statistics clamped
/// to `x₍₁₎` and `x₍ₙ₎` at the ends.
pub fn entropy_spacing(samples: &[f64], window: Option<usize>) -> Result<EntropyEstimate> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let m = window.unwrap_or_else(|| default_window(n));
    if m < 1 || m > n / 2 {
        return Err(Error::BadWindow { m, n });
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue(format!("sample {x}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = n as f64 / (2 * m) as f64;
    let mut moments = Moments::default();
    for i in 0..n {
        let gap = sorted[(i + m).min(n - 1)] - sorted[i.saturating_sub(m)];
        if !(gap > 0.0) {
            return Err(Error::DegenerateSamples(format!(
                "zero {m}-spacing at order statistic {i} (value {})",
                sorted[i]
            )));
        }
        moments.push((scale * gap).ln());
    }
    let se = (moments.m2 / (n - 1) as f64 / n as f64).sqrt();
    Ok(EntropyEstimate {
        value: moments.mean,
        method: EntropyMethod::Spacing,
        est_error: positive_error(se, moments.mean),
        n,
    })
}
