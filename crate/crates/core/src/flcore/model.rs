//! Multinomial logistic regression: model weights, the query/reply messages
//! of a round, and the local full-batch gradient-descent routine.

use serde::{Deserialize, Serialize};

use super::spec::{LocalHyperparams, ModelShape};
use super::{Dataset, FlError};

/// Weight matrix of shape `classes × (features + 1)`, row-major, bias last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub classes: usize,
    pub features: usize,
    pub w: Vec<f64>,
}

impl ModelWeights {
    pub fn zeros(shape: ModelShape) -> Self {
        ModelWeights {
            classes: shape.num_classes,
            features: shape.num_features,
            w: vec![0.0; shape.num_classes * (shape.num_features + 1)],
        }
    }

    pub fn new(classes: usize, features: usize, w: Vec<f64>) -> Result<Self, FlError> {
        let m = ModelWeights { classes, features, w };
        m.check()?;
        Ok(m)
    }

    /// Shape and finiteness check, applied to anything decoded from bytes.
    pub fn check(&self) -> Result<(), FlError> {
        if self.w.len() != self.classes * (self.features + 1) {
            return Err(FlError::Shape(format!(
                "{} weights for a {}x{} model",
                self.w.len(),
                self.classes,
                self.features + 1
            )));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(FlError::Shape("non-finite weight".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            num_features: self.features,
            num_classes: self.classes,
        }
    }

    fn stride(&self) -> usize {
        self.features + 1
    }

    /// Class scores for one feature row.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let s = self.stride();
        (0..self.classes)
            .map(|c| {
                let row = &self.w[c * s..(c + 1) * s];
                let mut z = row[self.features];
                for (wj, xj) in row[..self.features].iter().zip(x) {
                    z += wj * xj;
                }
                z
            })
            .collect()
    }

    fn check_data(&self, data: &Dataset) -> Result<(), FlError> {
        if data.cols() != self.features {
            return Err(FlError::Shape(format!(
                "model expects {} features, data has {}",
                self.features,
                data.cols()
            )));
        }
        if let Some(&bad) = data.labels().iter().find(|&&l| l >= self.classes) {
            return Err(FlError::Shape(format!("label {bad} outside {} classes", self.classes)));
        }
        Ok(())
    }
}

/// Softmax probabilities and log-sum-exp of a score vector.
pub(crate) fn softmax(z: &[f64]) -> (Vec<f64>, f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let lse = max + sum.ln();
    (exps.into_iter().map(|e| e / sum).collect(), lse)
}

/// Mean cross-entropy and its gradient with respect to every weight.
pub fn loss_and_gradient(model: &ModelWeights, data: &Dataset) -> Result<(f64, Vec<f64>), FlError> {
    model.check_data(data)?;
    let n = data.rows();
    let s = model.stride();
    let mut grad = vec![0.0; model.w.len()];
    if n == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for i in 0..n {
        let x = data.row(i);
        let y = data.labels()[i];
        let z = model.logits(x);
        let (p, lse) = softmax(&z);
        loss += lse - z[y];
        for c in 0..model.classes {
            let err = p[c] - if c == y { 1.0 } else { 0.0 };
            let g = &mut grad[c * s..(c + 1) * s];
            for (gj, xj) in g[..model.features].iter_mut().zip(x) {
                *gj += err * xj;
            }
            g[model.features] += err;
        }
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((loss * inv, grad))
}

/// Aggregator → party message for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub round: usize,
    pub party: usize,
    pub model: ModelWeights,
    pub hyperparams: LocalHyperparams,
}

/// Party → aggregator message carrying the locally trained weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub round: usize,
    pub party: usize,
    pub model: ModelWeights,
    pub sample_count: usize,
}

/// Runs `epochs` full-batch gradient steps on `data` from the queried model.
pub fn local_train(query: &Query, data: &Dataset) -> Result<Reply, FlError> {
    query.model.check()?;
    if data.rows() == 0 {
        return Err(FlError::Shape("cannot train on an empty dataset".into()));
    }
    let lr = query.hyperparams.learning_rate;
    let mut model = query.model.clone();
    for _ in 0..query.hyperparams.epochs {
        let (_, grad) = loss_and_gradient(&model, data)?;
        for (w, g) in model.w.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
    }
    Ok(Reply {
        round: query.round,
        party: query.party,
        model,
        sample_count: data.rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flcore::generate_synthetic_dataset;
    use crate::flcore::rng::SplitMix64;

    /// Direct evaluation of the mean cross-entropy, written without the
    /// shared softmax helper.
    fn naive_loss(w: &[f64], c: usize, d: usize, data: &Dataset) -> f64 {
        let mut total = 0.0;
        for i in 0..data.rows() {
            let x = data.row(i);
            let scores: Vec<f64> = (0..c)
                .map(|k| (0..d).map(|j| w[k * (d + 1) + j] * x[j]).sum::<f64>() + w[k * (d + 1) + d])
                .collect();
            let denom: f64 = scores.iter().map(|s| s.exp()).sum();
            total += -(scores[data.labels()[i]].exp() / denom).ln();
        }
        total / data.rows() as f64
    }

    fn random_model(seed: u64, c: usize, d: usize) -> ModelWeights {
        let mut rng = SplitMix64::new(seed);
        ModelWeights::new(c, d, (0..c * (d + 1)).map(|_| rng.uniform(-0.5, 0.5)).collect()).unwrap()
    }

    fn query(model: ModelWeights, lr: f64, epochs: u32) -> Query {
        Query {
            round: 1,
            party: 0,
            model,
            hyperparams: LocalHyperparams {
                learning_rate: lr,
                epochs,
            },
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..5u64 {
            let (c, d) = (3 + seed as usize % 3, 2 + seed as usize % 4);
            let data = generate_synthetic_dataset(seed, d, c, 6, 2.0).unwrap();
            let model = random_model(seed + 100, c, d);
            let (_, grad) = loss_and_gradient(&model, &data).unwrap();
            let h = 1e-6;
            for k in 0..model.w.len() {
                let mut plus = model.w.clone();
                let mut minus = model.w.clone();
                plus[k] += h;
                minus[k] -= h;
                let fd = (naive_loss(&plus, c, d, &data) - naive_loss(&minus, c, d, &data)) / (2.0 * h);
                let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-5, "seed {seed} weight {k}: analytic {} fd {fd} rel {rel}", grad[k]);
            }
        }
    }

    #[test]
    fn loss_matches_naive() {
        let data = generate_synthetic_dataset(9, 3, 4, 5, 1.5).unwrap();
        let model = random_model(1, 4, 3);
        let (loss, _) = loss_and_gradient(&model, &data).unwrap();
        assert!((loss - naive_loss(&model.w, 4, 3, &data)).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let data = generate_synthetic_dataset(2, 3, 3, 4, 1.0).unwrap();
        let model = random_model(4, 3, 3);
        let mut q = query(model.clone(), 0.1, 1);
        q.hyperparams.learning_rate = 0.0;
        let reply = local_train(&q, &data).unwrap();
        assert_eq!(reply.model, model);
        assert_eq!(reply.sample_count, data.rows());
        assert_eq!(reply.round, 1);
    }

    #[test]
    fn small_step_decreases_loss() {
        for seed in 0..5 {
            let data = generate_synthetic_dataset(seed, 4, 3, 10, 2.0).unwrap();
            let model = random_model(seed, 3, 4);
            let before = loss_and_gradient(&model, &data).unwrap().0;
            let reply = local_train(&query(model, 1e-3, 1), &data).unwrap();
            let after = loss_and_gradient(&reply.model, &data).unwrap().0;
            assert!(after <= before, "seed {seed}: {after} > {before}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let data = generate_synthetic_dataset(1, 3, 3, 2, 1.0).unwrap();
        let model = ModelWeights::zeros(ModelShape {
            num_features: 4,
            num_classes: 3,
        });
        assert!(matches!(local_train(&query(model, 0.1, 1), &data), Err(FlError::Shape(_))));
        let narrow = ModelWeights::zeros(ModelShape {
            num_features: 3,
            num_classes: 2,
        });
        assert!(local_train(&query(narrow, 0.1, 1), &data).is_err());
        assert!(ModelWeights::new(2, 2, vec![0.0; 5]).is_err());
        assert!(ModelWeights::new(1, 1, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let data = generate_synthetic_dataset(3, 4, 5, 8, 2.0).unwrap();
        let q = query(ModelWeights::zeros(ModelShape { num_features: 4, num_classes: 5 }), 0.1, 3);
        assert_eq!(local_train(&q, &data).unwrap(), local_train(&q, &data).unwrap());
    }
}
