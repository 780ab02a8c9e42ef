//! Hold-out evaluation metrics and the early-stopping rule.

use serde::{Deserialize, Serialize};

use super::model::{softmax, ModelWeights};
use super::spec::ProjectSpec;
use super::{Dataset, FlError};

/// Per-round evaluation results, in FactSheet column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub loss: f64,
    pub acc: f64,
    pub f1_micro: f64,
    pub precision_micro: f64,
    pub recall_micro: f64,
    pub f1_macro: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_weighted: f64,
    pub precision_weighted: f64,
    pub recall_weighted: f64,
}

impl RoundMetrics {
    /// Column headers of the performance table, `round` first.
    pub const COLUMNS: [&'static str; 12] = [
        "round",
        "loss",
        "acc",
        "f1 micro",
        "precision micro",
        "recall micro",
        "f1 macro",
        "precision macro",
        "recall macro",
        "f1 weighted",
        "precision weighted",
        "recall weighted",
    ];

    /// Metric values in column order (after `round`).
    pub fn values(&self) -> [f64; 11] {
        [
            self.loss,
            self.acc,
            self.f1_micro,
            self.precision_micro,
            self.recall_micro,
            self.f1_macro,
            self.precision_macro,
            self.recall_macro,
            self.f1_weighted,
            self.precision_weighted,
            self.recall_weighted,
        ]
    }

    pub fn with_round(mut self, round: usize) -> Self {
        self.round = round;
        self
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Index of the largest score; ties go to the lowest class.
pub fn predict(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Precision/recall/F1 averages from labels and predictions over `classes`.
///
/// Micro averages equal accuracy for single-label multiclass data and are
/// set from it directly. Macro averages divide by all `classes`, counting
/// absent classes as zero.
pub fn classification_metrics(labels: &[usize], preds: &[usize], classes: usize) -> RoundMetrics {
    let n = labels.len();
    let mut tp = vec![0usize; classes];
    let mut pred_count = vec![0usize; classes];
    let mut support = vec![0usize; classes];
    for (&y, &p) in labels.iter().zip(preds) {
        support[y] += 1;
        pred_count[p] += 1;
        if y == p {
            tp[y] += 1;
        }
    }
    let acc = ratio(tp.iter().sum(), n);
    let (mut pm, mut rm, mut fm) = (0.0, 0.0, 0.0);
    let (mut pw, mut rw, mut fw) = (0.0, 0.0, 0.0);
    for c in 0..classes {
        let p = ratio(tp[c], pred_count[c]);
        let r = ratio(tp[c], support[c]);
        let f = f1(p, r);
        pm += p;
        rm += r;
        fm += f;
        let w = ratio(support[c], n);
        pw += w * p;
        rw += w * r;
        fw += w * f;
    }
    let k = classes as f64;
    RoundMetrics {
        round: 0,
        loss: 0.0,
        acc,
        f1_micro: acc,
        precision_micro: acc,
        recall_micro: acc,
        f1_macro: fm / k,
        precision_macro: pm / k,
        recall_macro: rm / k,
        f1_weighted: fw,
        precision_weighted: pw,
        recall_weighted: rw,
    }
}

/// Mean cross-entropy and classification metrics of `model` on `data`.
pub fn evaluate(model: &ModelWeights, data: &Dataset) -> Result<RoundMetrics, FlError> {
    model.check()?;
    if data.cols() != model.features {
        return Err(FlError::Shape(format!(
            "model expects {} features, data has {}",
            model.features,
            data.cols()
        )));
    }
    if data.labels().iter().any(|&l| l >= model.classes) {
        return Err(FlError::Shape("label outside model classes".into()));
    }
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(data.rows());
    for i in 0..data.rows() {
        let z = model.logits(data.row(i));
        let (_, lse) = softmax(&z);
        loss += lse - z[data.labels()[i]];
        preds.push(predict(&z));
    }
    let mut m = classification_metrics(data.labels(), &preds, model.classes);
    m.loss = if data.rows() == 0 { 0.0 } else { loss / data.rows() as f64 };
    Ok(m)
}

/// True iff the hold-out accuracy reaches the configured threshold.
pub fn check_early_stop(metrics: &RoundMetrics, spec: &ProjectSpec) -> bool {
    spec.global_hyperparams
        .termination_accuracy
        .is_some_and(|t| metrics.acc >= t)
}
