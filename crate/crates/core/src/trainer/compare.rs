use std::collections::BTreeMap;

use serde::Serialize;

use super::data::Dataset;
use super::mlp::MLPConfig;
use super::train::{train, TrainConfig};
use crate::activation::{ActivationKind, ActivationParams};
use crate::json::fmt17;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub kind: ActivationKind,
    pub seed: u64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSummary {
    pub kind: ActivationKind,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stdev: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
    pub summary: Vec<KindSummary>,
}

impl CompareTable {
    pub fn accuracy(&self, kind: ActivationKind, seed: u64) -> Option<f64> {
        self.rows.iter().find(|r| r.kind == kind && r.seed == seed).map(|r| r.val_accuracy)
    }

    pub fn summary_for(&self, kind: ActivationKind) -> Option<&KindSummary> {
        self.summary.iter().find(|s| s.kind == kind)
    }

    /// One line per kind: `kind,seed_<s>…,mean,stdev`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind");
        for seed in &self.seeds {
            s.push_str(&format!(",seed_{seed}"));
        }
        s.push_str(",mean,stdev\n");
        for k in &self.summary {
            s.push_str(k.kind.name());
            for &seed in &self.seeds {
                s.push(',');
                s.push_str(&self.accuracy(k.kind, seed).map(fmt17).unwrap_or_default());
            }
            s.push_str(&format!(",{},{}\n", fmt17(k.mean), fmt17(k.stdev)));
        }
        s
    }
}

/// One configuration per `(kind, seed)`: the template with the kind swapped
/// in (keeping the template's ε) and both model and training seeds set.
pub fn cell_configs(
    template: &MLPConfig,
    tc: &TrainConfig,
    kind: ActivationKind,
    seed: u64,
) -> (MLPConfig, TrainConfig) {
    let params = ActivationParams { epsilon: template.params.epsilon, ..ActivationParams::for_kind(kind) };
    let mlp = MLPConfig { activation: kind, params, seed, ..template.clone() };
    let tc = TrainConfig { seed, ..tc.clone() };
    (mlp, tc)
}

/// Trains every `(kind, seed)` cell on the same split. Cells are independent,
/// so `workers > 1` runs them on scoped threads without changing any result.
pub fn compare_activations(
    train_set: &Dataset,
    val_set: &Dataset,
    template: &MLPConfig,
    tc: &TrainConfig,
    kinds: &[ActivationKind],
    seeds: &[u64],
    workers: usize,
) -> Result<CompareTable> {
    if kinds.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one kind and one seed".into()));
    }
    let cells: Vec<(ActivationKind, u64)> = kinds.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let run = |&(kind, seed): &(ActivationKind, u64)| -> Result<CompareRow> {
        let (mlp, tc) = cell_configs(template, tc, kind, seed);
        let r = train(train_set, val_set, &mlp, &tc)?;
        Ok(CompareRow { kind, seed, val_accuracy: r.final_val_accuracy() })
    };
    let workers = workers.clamp(1, cells.len());
    let results: Vec<Result<CompareRow>> = if workers == 1 {
        cells.iter().map(run).collect()
    } else {
        let per = cells.len().div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> =
                cells.chunks(per).map(|chunk| s.spawn(move || chunk.iter().map(run).collect::<Vec<_>>())).collect();
            handles.into_iter().flat_map(|h| h.join().expect("compare worker panicked")).collect()
        })
    };
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut by_kind: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        let pos = kinds.iter().position(|&k| k == r.kind).expect("row kind comes from the list");
        by_kind.entry(pos).or_default().push(r.val_accuracy);
    }
    let summary = by_kind
        .into_iter()
        .map(|(pos, acc)| {
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let stdev = if acc.len() > 1 {
                (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            KindSummary { kind: kinds[pos], mean, stdev, runs: acc.len() }
        })
        .collect();
    Ok(CompareTable { seeds: seeds.to_vec(), rows, summary })
}
