use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, SparseMatrix};

/// Labelled samples `(aᵢ, lᵢ)` with `lᵢ ∈ {−1, +1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: SparseMatrix,
    pub labels: Vec<f64>,
    pub name: String,
}

impl Dataset {
    pub fn new(features: SparseMatrix, labels: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(Error::InvalidDataset("dataset has no samples or no features".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} samples",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidDataset(format!("label {l} is not ±1")));
        }
        for r in 0..features.rows() {
            if features.row(r).1.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("sample {r} has a non-finite feature")));
            }
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Largest squared row norm, `maxᵢ ‖aᵢ‖²`.
    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.len())
            .map(|r| self.features.row_norm_sq(r))
            .fold(0.0, f64::max)
    }
}

fn map_label(raw: f64) -> f64 {
    if raw > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Reads `label idx:val idx:val …` lines (1-based, strictly ascending
/// indices). Files ending in `.gz` are decompressed. Labels map to ±1 by
/// sign with 0 → −1. With `scale`, every column is divided by its largest
/// absolute value so features land in `[−1, 1]`.
pub fn load_libsvm(path: &Path, scale: bool) -> Result<Dataset> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut triplets = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, format!("bad label `{label_tok}`")));
        }
        let row = labels.len();
        labels.push(map_label(label));

        let mut previous = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value `{val}`")));
            }
            if idx <= previous {
                return Err(Error::NonAscendingIndex {
                    path: path.to_path_buf(),
                    line: lineno,
                    previous,
                    current: idx,
                });
            }
            previous = idx;
            dim = dim.max(idx);
            triplets.push((row, idx - 1, val));
        }
    }
    if labels.is_empty() || dim == 0 {
        return Err(Error::InvalidDataset(format!("{} holds no samples", path.display())));
    }

    if scale {
        let mut max_abs = vec![0.0f64; dim];
        for &(_, c, v) in &triplets {
            max_abs[c] = max_abs[c].max(v.abs());
        }
        for t in &mut triplets {
            if max_abs[t.1] > 0.0 {
                t.2 /= max_abs[t.1];
            }
        }
    }
    let features = SparseMatrix::from_triplets(labels.len(), dim, &triplets);
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(features, labels, name)
}

/// Standard-normal rows, a planted `x*` with `⌈sparsity·d⌉` nonzeros, and
/// labels `sign(aᵢᵀx* + noise·εᵢ)`.
pub fn synth_dataset(
    n: usize,
    d: usize,
    sparsity: f64,
    noise: f64,
    seed: u64,
) -> Result<(Dataset, Vec<f64>)> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidDataset("n and d must be positive".into()));
    }
    if !(0.0..=1.0).contains(&sparsity) || !(noise >= 0.0) {
        return Err(Error::InvalidDataset(format!(
            "need sparsity in [0, 1] and noise ≥ 0, got {sparsity} and {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = ((sparsity * d as f64).ceil() as usize).min(d);
    let mut planted = vec![0.0; d];
    for j in sample(&mut rng, d, support) {
        planted[j] = StandardNormal.sample(&mut rng);
    }
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let labels = data
        .chunks(d)
        .map(|row| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            map_label(linalg::dot(row, &planted) + noise * eps)
        })
        .collect();
    let features = SparseMatrix::from_dense(n, d, &data);
    let dataset = Dataset::new(features, labels, format!("synthetic-n{n}-d{d}-s{seed}"))?;
    Ok((dataset, planted))
}

/// Regression data `bᵢ = aᵢᵀx* + noise·εᵢ` with standard-normal rows and a
/// planted `x*` that is 1 on every third coordinate and 0 elsewhere.
pub fn synth_regression(
    n: usize,
    d: usize,
    noise: f64,
    seed: u64,
) -> Result<(SparseMatrix, Vec<f64>, Vec<f64>)> {
    if n == 0 || d == 0 || !(noise >= 0.0) {
        return Err(Error::InvalidDataset(format!(
            "need n, d ≥ 1 and noise ≥ 0, got n={n}, d={d}, noise={noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..d).map(|j| if j % 3 == 0 { 1.0 } else { 0.0 }).collect();
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let targets = data
        .chunks(d)
        .map(|row| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            linalg::dot(row, &planted) + noise * eps
        })
        .collect();
    Ok((SparseMatrix::from_dense(n, d, &data), targets, planted))
}
