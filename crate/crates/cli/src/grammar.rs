//! The `kind:param,param,…` mini-grammar for densities, activations, grids,
//! intervals and datasets.

use std::path::Path;

use eafo_core::density::parse_samples;
use eafo_core::trainer::{blobs, load_csv, load_idx, two_moons, Dataset};
use eafo_core::variational::WafbcSpec;
use eafo_core::{Activation, ActivationKind, ActivationParams, Density1D, Interval};

use crate::error::{CliError, Result};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Positional and `name=value` arguments after the `kind:` prefix.
struct Args<'a> {
    spec: &'a str,
    positional: Vec<&'a str>,
    named: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn split(spec: &'a str, rest: &'a str) -> Self {
        let mut positional = Vec::new();
        let mut named = Vec::new();
        for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.split_once('=') {
                Some((k, v)) => named.push((k.trim(), v.trim())),
                None => positional.push(tok),
            }
        }
        Args { spec, positional, named }
    }

    /// Value of parameter `name`, given by name or at position `index`.
    fn get(&self, name: &str, index: usize) -> Option<&'a str> {
        self.named.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).or_else(|| self.positional.get(index).copied())
    }

    fn float(&self, name: &str, index: usize) -> Result<Option<f64>> {
        self.get(name, index).map(|v| parse_f64(v, self.spec)).transpose()
    }

    fn required(&self, name: &str, index: usize) -> Result<f64> {
        self.float(name, index)?.ok_or_else(|| usage(format!("`{}` is missing parameter `{name}`", self.spec)))
    }

    fn reject_unknown(&self, allowed: &[&str], max_positional: usize) -> Result<()> {
        if let Some((k, _)) = self.named.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(usage(format!("`{}` has unknown parameter `{k}`", self.spec)));
        }
        if self.positional.len() > max_positional {
            return Err(usage(format!("`{}` has too many parameters", self.spec)));
        }
        Ok(())
    }
}

fn parse_f64(s: &str, context: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| usage(format!("`{t}` in `{context}` is not a number"))),
    }
}

fn split_kind(spec: &str) -> (&str, &str) {
    let spec = spec.trim();
    spec.split_once(':').unwrap_or((spec, ""))
}

/// Parses a density such as `gaussian:0,1`, `uniform:0,1`,
/// `mixture:0.3,-1,0.5,0.7,1.5,1`, `kde:samples.txt,bandwidth=0.2` or
/// `truncated:gaussian:0,1@0..inf`.
pub fn parse_density(spec: &str) -> Result<Density1D> {
    let (kind, rest) = split_kind(spec);
    let built = match kind {
        "gaussian" | "normal" => {
            let a = Args::split(spec, rest);
            a.reject_unknown(&["mu", "sigma"], 2)?;
            Density1D::gaussian(a.float("mu", 0)?.unwrap_or(0.0), a.float("sigma", 1)?.unwrap_or(1.0))
        }
        "uniform" => {
            let a = Args::split(spec, rest);
            a.reject_unknown(&["a", "b"], 2)?;
            Density1D::uniform(a.float("a", 0)?.unwrap_or(0.0), a.float("b", 1)?.unwrap_or(1.0))
        }
        "mixture" => {
            let values = rest.split(',').map(|v| parse_f64(v, spec)).collect::<Result<Vec<_>>>()?;
            if values.is_empty() || values.len() % 3 != 0 {
                return Err(usage(format!("`{spec}` needs weight,mu,sigma triples")));
            }
            let w: Vec<f64> = values.chunks(3).map(|c| c[0]).collect();
            let mu: Vec<f64> = values.chunks(3).map(|c| c[1]).collect();
            let sigma: Vec<f64> = values.chunks(3).map(|c| c[2]).collect();
            Density1D::gaussian_mixture(&w, &mu, &sigma)
        }
        "kde" => {
            let a = Args::split(spec, rest);
            a.reject_unknown(&["path", "bandwidth"], 2)?;
            let path = a.get("path", 0).ok_or_else(|| usage(format!("`{spec}` needs a sample file")))?;
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
            let samples = parse_samples(&text)?;
            Density1D::empirical_kde(&samples, a.float("bandwidth", 1)?)
        }
        "truncated" => {
            let (inner, bounds) =
                rest.rsplit_once('@').ok_or_else(|| usage(format!("`{spec}` needs `@lo..hi` bounds")))?;
            let (lo, hi) = bounds.split_once("..").ok_or_else(|| usage(format!("`{spec}` needs `@lo..hi` bounds")))?;
            Density1D::truncated(parse_density(inner)?, parse_f64(lo, spec)?, parse_f64(hi, spec)?)
        }
        other => return Err(usage(format!("unknown density kind `{other}`"))),
    };
    Ok(built?)
}

/// Parses an activation such as `relu`, `crrelu:epsilon=0.01`, `elu:1`,
/// `affine:2,0` or `wafbc:gaussian:0,1,c1=1,c2=0`.
pub fn parse_activation(spec: &str) -> Result<Activation> {
    let (kind, rest) = split_kind(spec);
    match kind {
        "affine" => {
            let a = Args::split(spec, rest);
            a.reject_unknown(&["a", "b"], 2)?;
            Ok(Activation::affine(a.required("a", 0)?, a.float("b", 1)?.unwrap_or(0.0)))
        }
        "wafbc" => {
            let mut c = (1.0, 0.0);
            let mut base = Vec::new();
            for tok in rest.split(',') {
                match tok.trim().split_once('=') {
                    Some(("c1", v)) => c.0 = parse_f64(v, spec)?,
                    Some(("c2", v)) => c.1 = parse_f64(v, spec)?,
                    _ => base.push(tok),
                }
            }
            let base =
                if base.iter().all(|t| t.trim().is_empty()) { "gaussian:0,1".to_string() } else { base.join(",") };
            Ok(Activation::wafbc(WafbcSpec::new(parse_density(&base)?, c.0, c.1)?))
        }
        name => {
            let kind: ActivationKind = name.parse().map_err(|_| usage(format!("unknown activation kind `{name}`")))?;
            let mut params = ActivationParams::for_kind(kind);
            let a = Args::split(spec, rest);
            match kind {
                ActivationKind::CrRelu => {
                    a.reject_unknown(&["epsilon"], 1)?;
                    params.epsilon = a.float("epsilon", 0)?.unwrap_or(params.epsilon);
                }
                ActivationKind::Elu | ActivationKind::Celu | ActivationKind::Prelu => {
                    a.reject_unknown(&["alpha"], 1)?;
                    params.alpha = a.float("alpha", 0)?.unwrap_or(params.alpha);
                }
                _ => a.reject_unknown(&[], 0)?,
            }
            Ok(Activation::from_kind(kind, params)?)
        }
    }
}

/// `lo:hi`, either end may be `inf` or `-inf`.
pub fn parse_interval(spec: &str) -> Result<Interval> {
    let (lo, hi) = spec.split_once(':').ok_or_else(|| usage(format!("interval `{spec}` must be lo:hi")))?;
    Ok(Interval::new(parse_f64(lo, spec)?, parse_f64(hi, spec)?)?)
}

/// `lo:hi:count`.
pub fn parse_grid(spec: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(usage(format!("grid `{spec}` must be lo:hi:count")));
    };
    let count = count.trim().parse().map_err(|_| usage(format!("grid count `{count}` is not an integer")))?;
    Ok((parse_f64(lo, spec)?, parse_f64(hi, spec)?, count))
}

/// Comma-separated list of values parsed with `FromStr`.
pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(format!("`{t}` is not a valid {what}"))))
        .collect()
}

/// `blobs:n,separation`, `two-moons:n,noise`, `csv:path[,header]` or
/// `idx:images,labels`. Generators take the dataset seed.
pub fn parse_dataset(spec: &str, seed: u64) -> Result<Dataset> {
    let (kind, rest) = split_kind(spec);
    let a = Args::split(spec, rest);
    let count = |name: &str, default: usize| -> Result<usize> {
        a.get(name, 0)
            .map_or(Ok(default), |v| v.parse().map_err(|_| usage(format!("`{v}` in `{spec}` is not a count"))))
    };
    let built = match kind {
        "blobs" => {
            a.reject_unknown(&["n", "separation"], 2)?;
            blobs(count("n", 2000)?, a.float("separation", 1)?.unwrap_or(4.0), seed)
        }
        "two-moons" | "moons" => {
            a.reject_unknown(&["n", "noise"], 2)?;
            two_moons(count("n", 2000)?, a.float("noise", 1)?.unwrap_or(0.1), seed)
        }
        "csv" => {
            a.reject_unknown(&["path", "header"], 2)?;
            let path = a.get("path", 0).ok_or_else(|| usage(format!("`{spec}` needs a file")))?;
            let header = match a.get("header", 1) {
                None | Some("false") | Some("noheader") => false,
                Some("true") | Some("header") => true,
                Some(v) => return Err(usage(format!("header flag `{v}` must be true or false"))),
            };
            load_csv(Path::new(path), header)
        }
        "idx" => {
            a.reject_unknown(&["images", "labels"], 2)?;
            let images = a.get("images", 0).ok_or_else(|| usage(format!("`{spec}` needs an image file")))?;
            let labels = a.get("labels", 1).ok_or_else(|| usage(format!("`{spec}` needs a label file")))?;
            load_idx(Path::new(images), Path::new(labels))
        }
        other => return Err(usage(format!("unknown dataset kind `{other}`"))),
    };
    Ok(built?)
}
