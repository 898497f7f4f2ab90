use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::data::Dataset;
use super::mlp::{argmax, param_count, softmax_cross_entropy, MLPConfig, Mlp};
use super::optim::{Optimizer, OptimizerKind};
use super::probe::{entropy_probe, ProbeEntry};
use crate::json::{fmt17, to_json_string};
use crate::{Error, Result};

/// RNG stream for mini-batch order, separate from weight initialisation.
const SHUFFLE_STREAM: u64 = 1;

/// Learning-rate schedule over epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine from the base rate at epoch 1 down to 0 after the last epoch.
    Cosine,
}

impl std::fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Cosine => "cosine",
        })
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            _ => Err(Error::Parse(format!("unknown schedule `{s}` (expected constant or cosine)"))),
        }
    }
}

impl LrSchedule {
    /// Multiplier for 1-based `epoch` out of `epochs`.
    pub fn factor(self, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * (epoch - 1) as f64 / epochs as f64).cos()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    pub schedule: LrSchedule,
    pub seed: u64,
    /// Probe hidden-layer entropies every this many epochs (and before
    /// training); 0 disables probing.
    pub probe_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            weight_decay: 0.0,
            schedule: LrSchedule::Constant,
            seed: 0,
            probe_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight_decay must be non-negative, got {}", self.weight_decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Full-pass cross-entropy on the training split after the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Learnable activation scalars per layer after the epoch.
    pub learned_params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSnapshot {
    pub epoch: usize,
    pub entries: Vec<ProbeEntry>,
}

/// Everything a run produces. Wall-clock time is kept out of the serialised
/// form so that reruns give byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub mlp_config: MLPConfig,
    pub train_config: TrainConfig,
    pub param_count: usize,
    /// Loss on the training split before any update.
    pub initial_loss: f64,
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    pub final_params: Vec<f64>,
    pub probes: Vec<ProbeSnapshot>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    pub fn final_val_accuracy(&self) -> f64 {
        self.epochs.last().map_or(self.initial_val_accuracy, |e| e.val_accuracy)
    }

    pub fn epochs_csv(&self) -> String {
        let k = self.final_params.len();
        let mut s = String::from("epoch,train_loss,train_accuracy,val_accuracy");
        for l in 0..k {
            s.push_str(&format!(",param_{l}"));
        }
        s.push('\n');
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{}",
                e.epoch,
                fmt17(e.train_loss),
                fmt17(e.train_accuracy),
                fmt17(e.val_accuracy)
            ));
            for p in &e.learned_params {
                s.push(',');
                s.push_str(&fmt17(*p));
            }
            s.push('\n');
        }
        s
    }

    /// Writes `run.json` and `epochs.csv` into `dir`, creating it.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join("run.json");
        let csv = dir.join("epochs.csv");
        std::fs::write(&json, to_json_string(self)?)?;
        std::fs::write(&csv, self.epochs_csv())?;
        Ok((json, csv))
    }
}

/// Run directory name from a timestamp and the run seed.
pub fn run_dir_name(timestamp: &str, seed: u64) -> String {
    format!("run-{timestamp}-seed{seed}")
}

/// Mean cross-entropy and accuracy over a whole dataset.
pub fn evaluate(model: &Mlp, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("cannot evaluate on an empty dataset".into()));
    }
    let (logits, _) = model.forward(data.features())?;
    let (loss, _) = softmax_cross_entropy(&logits, data.labels())?;
    let hits = (0..logits.rows()).filter(|&r| argmax(logits.row(r)) == data.labels()[r]).count();
    Ok((loss, hits as f64 / data.len() as f64))
}

fn check_data(data: &Dataset, config: &MLPConfig, what: &str) -> Result<()> {
    if data.input_dim() != config.layer_widths[0] {
        return Err(Error::ShapeMismatch(format!(
            "{what} has {} features, model expects {}",
            data.input_dim(),
            config.layer_widths[0]
        )));
    }
    let out = *config.layer_widths.last().expect("validated widths");
    if data.classes() != out {
        return Err(Error::ShapeMismatch(format!("{what} has {} classes, model has {out} outputs", data.classes())));
    }
    Ok(())
}

/// Trains a fresh model and returns it with its record.
pub fn train_model(train: &Dataset, val: &Dataset, mlp: &MLPConfig, tc: &TrainConfig) -> Result<(Mlp, RunRecord)> {
    let started = Instant::now();
    mlp.validate()?;
    tc.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidConfig("training and validation sets must be non-empty".into()));
    }
    check_data(train, mlp, "training set")?;
    check_data(val, mlp, "validation set")?;

    let mut model = Mlp::new(mlp.clone())?;
    let mut opt = Optimizer::new(tc.optimizer, tc.learning_rate, tc.weight_decay, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(SHUFFLE_STREAM);

    let (initial_loss, _) = evaluate(&model, train)?;
    let (_, initial_val_accuracy) = evaluate(&model, val)?;
    let mut probes = Vec::new();
    if tc.probe_every > 0 {
        probes.push(ProbeSnapshot { epoch: 0, entries: entropy_probe(&model, train, None)? });
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(tc.epochs);
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        opt.set_learning_rate(tc.learning_rate * tc.schedule.factor(epoch, tc.epochs));
        for chunk in order.chunks(tc.batch_size) {
            let batch = train.subset(chunk);
            let (logits, cache) = model.forward(batch.features())?;
            let (loss, grad) = softmax_cross_entropy(&logits, batch.labels())?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteValue(format!("training loss diverged in epoch {epoch}")));
            }
            let grads = model.backward(&cache, &grad)?;
            opt.step(&mut model, &grads);
        }
        if model.learnable_params().iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteValue(format!("learnable parameter diverged in epoch {epoch}")));
        }
        let (train_loss, train_accuracy) = evaluate(&model, train)?;
        let (_, val_accuracy) = evaluate(&model, val)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            val_accuracy,
            learned_params: model.learnable_params().to_vec(),
        });
        if tc.probe_every > 0 && (epoch % tc.probe_every == 0 || epoch == tc.epochs) {
            probes.push(ProbeSnapshot { epoch, entries: entropy_probe(&model, train, None)? });
        }
    }

    let record = RunRecord {
        mlp_config: mlp.clone(),
        train_config: tc.clone(),
        param_count: param_count(mlp),
        initial_loss,
        initial_val_accuracy,
        epochs,
        final_params: model.learnable_params().to_vec(),
        probes,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}

pub fn train(train: &Dataset, val: &Dataset, mlp: &MLPConfig, tc: &TrainConfig) -> Result<RunRecord> {
    train_model(train, val, mlp, tc).map(|(_, r)| r)
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::trainer::data::blobs;

    fn data() -> (Dataset, Dataset) {
        blobs(600, 4.0, 0).unwrap().split(0.25, 0).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig { epochs: 5, ..Default::default() }
    }

    #[test]
    fn reruns_are_identical() {
        let (tr, va) = data();
        let cfg = MLPConfig::new(vec![2, 8, 2], ActivationKind::CrRelu);
        let a = train(&tr, &va, &cfg, &quick()).unwrap();
        let b = train(&tr, &va, &cfg, &quick()).unwrap();
        assert_eq!(to_json_string(&a).unwrap(), to_json_string(&b).unwrap());
        assert_eq!(a.epochs.len(), 5);
        assert!(a.epochs.iter().all(|e| (0.0..=1.0).contains(&e.val_accuracy)));
    }

    #[test]
    fn zero_epsilon_crrelu_starts_like_relu() {
        let (tr, va) = data();
        let relu = MLPConfig::new(vec![2, 8, 8, 2], ActivationKind::Relu);
        let mut cr = MLPConfig::new(vec![2, 8, 8, 2], ActivationKind::CrRelu);
        cr.params.epsilon = 0.0;
        let a = train(&tr, &va, &relu, &quick()).unwrap();
        let b = train(&tr, &va, &cr, &quick()).unwrap();
        assert_eq!(a.initial_loss, b.initial_loss);
    }

    #[test]
    fn mismatched_data_is_rejected() {
        let (tr, va) = data();
        let cfg = MLPConfig::new(vec![3, 4, 2], ActivationKind::Relu);
        assert!(matches!(train(&tr, &va, &cfg, &quick()), Err(Error::ShapeMismatch(_))));
        let cfg = MLPConfig::new(vec![2, 4, 3], ActivationKind::Relu);
        assert!(matches!(train(&tr, &va, &cfg, &quick()), Err(Error::ShapeMismatch(_))));
        let bad = TrainConfig { learning_rate: 0.0, ..quick() };
        let cfg = MLPConfig::new(vec![2, 4, 2], ActivationKind::Relu);
        assert!(matches!(train(&tr, &va, &cfg, &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn divergence_is_an_error() {
        let (tr, va) = data();
        let cfg = MLPConfig::new(vec![2, 8, 2], ActivationKind::Identity);
        let wild = TrainConfig { learning_rate: 1e200, optimizer: OptimizerKind::Sgd, ..quick() };
        assert!(matches!(train(&tr, &va, &cfg, &wild), Err(Error::NonFiniteValue(_))));
    }

    #[test]
    fn saved_files() {
        let (tr, va) = data();
        let cfg = MLPConfig::new(vec![2, 4, 2], ActivationKind::Prelu);
        let r = train(&tr, &va, &cfg, &TrainConfig { epochs: 2, probe_every: 1, ..quick() }).unwrap();
        assert_eq!(r.probes.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        let (json, csv) = r.save(&dir.path().join(run_dir_name("20240101T000000", 0))).unwrap();
        let text = std::fs::read_to_string(csv).unwrap();
        assert!(text.starts_with("epoch,train_loss,train_accuracy,val_accuracy,param_0\n"));
        assert_eq!(text.lines().count(), 3);
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(v["param_count"], 23);
        assert!(v.get("wall_clock_seconds").is_none());
    }

    #[test]
    fn moving_average_window() {
        assert_eq!(moving_average(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }
}
