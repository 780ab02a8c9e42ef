//! Tabular datasets, synthetic Gaussian blobs, CSV ingestion and the
//! canonical rendering used for dataset digests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rng::SplitMix64;
use super::FlError;
use crate::ledger::{digest, float, Digest};

/// Self-attested origin metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub size: usize,
}

/// Row-major feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(features: Vec<f64>, cols: usize, labels: Vec<usize>, source: impl Into<String>) -> Result<Self, FlError> {
        let rows = labels.len();
        if features.len() != rows * cols {
            return Err(FlError::Shape(format!(
                "{} feature values for {rows} rows of {cols} columns",
                features.len()
            )));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(FlError::Shape(format!("non-finite feature value {bad}")));
        }
        Ok(Dataset {
            features,
            rows,
            cols,
            labels,
            provenance: Provenance {
                source: source.into(),
                size: rows,
            },
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.features[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.features[r * self.cols + c] = v;
    }

    /// Largest label plus one (0 for an empty dataset).
    pub fn label_span(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub(crate) fn with_features(&self, features: Vec<f64>, cols: usize) -> Dataset {
        Dataset {
            features,
            rows: self.rows,
            cols,
            labels: self.labels.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Row-major text: each row's features then its label, comma-separated,
    /// rows joined by newlines; numbers in shortest round-trip form.
    pub fn canonical_rendering(&self) -> String {
        (0..self.rows)
            .map(|r| {
                let mut fields: Vec<String> = self
                    .row(r)
                    .iter()
                    .map(|v| float(*v).expect("features are finite").to_string())
                    .collect();
                fields.push(self.labels[r].to_string());
                fields.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Reads a CSV with a header row: feature columns followed by `label`.
    pub fn from_csv(path: &Path) -> Result<Self, FlError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| FlError::Csv(e.to_string()))?;
        let headers = reader.headers().map_err(|e| FlError::Csv(e.to_string()))?.clone();
        if headers.iter().next_back() != Some("label") {
            return Err(FlError::Csv(format!("{}: last column must be `label`", path.display())));
        }
        let cols = headers.len() - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| FlError::Csv(e.to_string()))?;
            let parse_err = |what: &str| FlError::Csv(format!("{}: row {}: bad {what}", path.display(), i + 1));
            for v in rec.iter().take(cols) {
                features.push(v.trim().parse::<f64>().map_err(|_| parse_err("feature"))?);
            }
            let label = rec.get(cols).ok_or_else(|| parse_err("label"))?;
            labels.push(label.trim().parse::<usize>().map_err(|_| parse_err("label"))?);
        }
        Dataset::new(features, cols, labels, path.display().to_string())
    }
}

/// SHA-512 of the dataset's canonical rendering.
pub fn dataset_digest(data: &Dataset) -> Digest {
    digest(data.canonical_rendering().as_bytes())
}

/// Class centres drawn uniformly from `[-class_sep, class_sep]^d`.
pub fn class_means(rng: &mut SplitMix64, d: usize, classes: usize, class_sep: f64) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|_| (0..d).map(|_| rng.uniform(-class_sep, class_sep)).collect())
        .collect()
}

/// Unit-variance samples around `means`, interleaved by class.
pub fn sample_blobs(rng: &mut SplitMix64, means: &[Vec<f64>], per_class: usize, source: &str) -> Dataset {
    let d = means.first().map_or(0, Vec::len);
    let mut features = Vec::with_capacity(per_class * means.len() * d);
    let mut labels = Vec::with_capacity(per_class * means.len());
    for _ in 0..per_class {
        for (c, mean) in means.iter().enumerate() {
            features.extend(mean.iter().map(|m| m + rng.gaussian()));
            labels.push(c);
        }
    }
    Dataset::new(features, d, labels, source).expect("generated values are finite")
}

/// Gaussian-blob dataset with `per_class` rows per class, deterministic in `seed`.
pub fn generate_synthetic_dataset(
    seed: u64,
    d: usize,
    classes: usize,
    per_class: usize,
    class_sep: f64,
) -> Result<Dataset, FlError> {
    if d == 0 || classes < 2 || per_class == 0 {
        return Err(FlError::Config(format!(
            "synthetic dataset needs d >= 1, C >= 2, per_class >= 1 (got {d}, {classes}, {per_class})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let means = class_means(&mut rng, d, classes, class_sep);
    Ok(sample_blobs(&mut rng, &means, per_class, &format!("synthetic:seed={seed}")))
}
