//! Datasets: in-repo generators and the CSV / IDX loaders.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor2;
use crate::density::std_normal_quantile;
use crate::entropy::open_unit;
use crate::{Error, Result};

const SPLIT_STREAM: u64 = 2;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Tensor2,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    /// `classes` defaults to one more than the largest label.
    pub fn new(features: Tensor2, labels: Vec<usize>, classes: Option<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!("{} rows but {} labels", features.rows(), labels.len())));
        }
        let needed = labels.iter().max().map_or(0, |m| m + 1);
        let classes = classes.unwrap_or(needed);
        if needed > classes {
            return Err(Error::ShapeMismatch(format!("label {} with {classes} classes", needed - 1)));
        }
        features.check_finite("features")?;
        Ok(Dataset { features, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Tensor2 {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Shuffles with `seed` and holds out `val_fraction` of the rows.
    pub fn split(&self, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&val_fraction) {
            return Err(Error::InvalidConfig(format!("val_fraction must be in [0, 1), got {val_fraction}")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SPLIT_STREAM);
        idx.shuffle(&mut rng);
        let n_val = (val_fraction * self.len() as f64).round() as usize;
        let (val, train) = idx.split_at(n_val);
        Ok((self.subset(train), self.subset(val)))
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    std_normal_quantile(open_unit(rng))
}

/// Two isotropic unit-variance Gaussian classes in 2-D whose means sit
/// `separation` apart on the first axis. Labels alternate 0, 1, 0, …
pub fn blobs(n: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::InvalidConfig(format!("blob separation must be non-negative, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let centre = if y == 0 { -0.5 * separation } else { 0.5 * separation };
        data.push(centre + normal(&mut rng));
        data.push(normal(&mut rng));
        labels.push(y);
    }
    Dataset::new(Tensor2::from_vec(n, 2, data)?, labels, Some(2))
}

/// The usual interleaved half circles with isotropic Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidConfig(format!("moon noise must be non-negative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2;
        let t = std::f64::consts::PI * open_unit(&mut rng);
        let (x0, x1) = if y == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        data.push(x0 + noise * normal(&mut rng));
        data.push(x1 + noise * normal(&mut rng));
        labels.push(y);
    }
    Dataset::new(Tensor2::from_vec(n, 2, data)?, labels, Some(2))
}

/// One sample per line: features then an integer label, comma separated.
/// Blank lines are skipped.
pub fn parse_csv(text: &str, has_header: bool) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    if has_header {
        lines.next();
    }
    for (no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse(format!("line {}: need features and a label", no + 1)));
        }
        let (feat, label) = fields.split_at(fields.len() - 1);
        let row = feat
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: `{f}`: {e}", no + 1))))
            .collect::<Result<Vec<f64>>>()?;
        let y = label[0]
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("line {}: label `{}`: {e}", no + 1, label[0])))?;
        rows.push(row);
        labels.push(y);
    }
    if rows.is_empty() {
        return Err(Error::Parse("CSV contains no samples".into()));
    }
    let features = Tensor2::from_rows(&rows).map_err(|e| Error::Parse(e.to_string()))?;
    Dataset::new(features, labels, None)
}

pub fn load_csv(path: &Path, has_header: bool) -> Result<Dataset> {
    parse_csv(&std::fs::read_to_string(path)?, has_header)
}

fn idx_header(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, &[u8])> {
    let word = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::Parse("IDX file truncated in header".into()))
    };
    let found = word(0)?;
    if found != magic {
        return Err(Error::Parse(format!("IDX magic {found:#010x}, expected {magic:#010x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let dims = (0..ndim).map(|i| word(4 + 4 * i).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let payload = &bytes[4 + 4 * ndim..];
    let expected: usize = dims.iter().product();
    if payload.len() != expected {
        return Err(Error::Parse(format!(
            "IDX payload has {} bytes, dimensions {dims:?} need {expected}",
            payload.len()
        )));
    }
    Ok((dims, payload))
}

/// Unsigned-byte image tensor, one flattened image per row, scaled to [0, 1].
pub fn parse_idx_images(bytes: &[u8]) -> Result<Tensor2> {
    let (dims, payload) = idx_header(bytes, IDX_IMAGES_MAGIC)?;
    let data = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    Tensor2::from_vec(dims[0], dims[1] * dims[2], data)
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let (_, payload) = idx_header(bytes, IDX_LABELS_MAGIC)?;
    Ok(payload.iter().map(|&b| b as usize).collect())
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let x = parse_idx_images(&std::fs::read(images)?)?;
    let y = parse_idx_labels(&std::fs::read(labels)?)?;
    Dataset::new(x, y, None)
}
