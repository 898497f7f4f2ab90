//! Per-layer, per-class spacing entropies of hidden activations.

use serde::Serialize;

use super::data::Dataset;
use super::mlp::Mlp;
use crate::entropy::{entropy_spacing, EntropyEstimate, EntropyMethod};
use crate::{Error, Result};

/// Fewest samples per class the probe accepts.
pub const MIN_CLASS_SAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeEntry {
    pub layer: usize,
    pub class: usize,
    pub stage: Stage,
    /// Mean over the units whose samples are not degenerate. `None` when
    /// every post-activation unit has tied samples (an atom, so the
    /// differential entropy is −∞).
    pub estimate: Option<EntropyEstimate>,
    pub units: usize,
    /// Units left out because of tied samples (for instance ReLU's atom at 0).
    pub degenerate_units: usize,
}

fn unit_average(
    columns: impl Iterator<Item = Vec<f64>>,
    window: Option<usize>,
) -> Result<(EntropyEstimate, usize, usize)> {
    let (mut sum, mut err, mut units, mut skipped, mut n) = (0.0, 0.0, 0usize, 0usize, 0usize);
    let mut last_err = None;
    for col in columns {
        match entropy_spacing(&col, window) {
            Ok(e) => {
                sum += e.value;
                err += e.est_error;
                n = e.n;
                units += 1;
            }
            Err(e @ Error::DegenerateSamples(_)) => {
                skipped += 1;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if units == 0 {
        return Err(last_err.unwrap_or_else(|| Error::DegenerateSamples("layer has no units".into())));
    }
    let k = units as f64;
    Ok((EntropyEstimate { value: sum / k, method: EntropyMethod::Spacing, est_error: err / k, n }, units, skipped))
}

/// Spacing-estimator entropies of every hidden layer's pre- and
/// post-activation values, split by class and averaged over units.
pub fn entropy_probe(model: &Mlp, data: &Dataset, window: Option<usize>) -> Result<Vec<ProbeEntry>> {
    let mut out = Vec::new();
    for class in 0..data.classes() {
        let idx = data.class_indices(class);
        if idx.len() < MIN_CLASS_SAMPLES {
            return Err(Error::TooFewSamples { needed: MIN_CLASS_SAMPLES, got: idx.len() });
        }
        let subset = data.subset(&idx);
        let (_, cache) = model.forward(subset.features())?;
        let layers = cache.pre_activations().iter().zip(cache.post_activations());
        for (layer, (pre, post)) in layers.enumerate() {
            for (stage, t) in [(Stage::Pre, pre), (Stage::Post, post)] {
                let entry = match unit_average((0..t.cols()).map(|c| t.column(c)), window) {
                    Ok((estimate, units, degenerate_units)) => {
                        ProbeEntry { layer, class, stage, estimate: Some(estimate), units, degenerate_units }
                    }
                    Err(Error::DegenerateSamples(_)) if stage == Stage::Post => {
                        ProbeEntry { layer, class, stage, estimate: None, units: 0, degenerate_units: t.cols() }
                    }
                    Err(e) => return Err(e),
                };
                out.push(entry);
            }
        }
    }
    Ok(out)
}

/// Sum over classes of the unit-averaged entropy at `layer`; −∞ if any class
/// has no usable unit.
pub fn class_entropy_sum(entries: &[ProbeEntry], layer: usize, stage: Stage) -> f64 {
    entries
        .iter()
        .filter(|e| e.layer == layer && e.stage == stage)
        .map(|e| e.estimate.as_ref().map_or(f64::NEG_INFINITY, |x| x.value))
        .sum()
}
