//! Fusion routines: sample-weighted averaging and Krum selection.

use super::model::{ModelWeights, Reply};
use super::spec::{FusionAlgorithm, FusionConfig};
use super::FlError;

fn check_shapes(replies: &[Reply]) -> Result<(), FlError> {
    let first = replies.first().ok_or(FlError::EmptyReplies)?;
    for r in replies {
        r.model.check()?;
        if r.model.shape() != first.model.shape() {
            return Err(FlError::Shape(format!(
                "reply from party {} has shape {:?}, expected {:?}",
                r.party,
                r.model.shape(),
                first.model.shape()
            )));
        }
    }
    Ok(())
}

/// Weighted mean of reply weights, weight `n_i / Σ n`.
///
/// Replies are accumulated in ascending party order (stable for duplicate
/// indices) so the result is bit-identical under replay.
pub fn fedavg(replies: &[Reply]) -> Result<ModelWeights, FlError> {
    check_shapes(replies)?;
    let mut ordered: Vec<&Reply> = replies.iter().collect();
    ordered.sort_by_key(|r| r.party);
    let total: usize = ordered.iter().map(|r| r.sample_count).sum();
    if total == 0 {
        return Err(FlError::Shape("replies carry zero samples".into()));
    }
    let mut out = ModelWeights {
        w: vec![0.0; ordered[0].model.w.len()],
        ..ordered[0].model.clone()
    };
    for r in ordered {
        let weight = r.sample_count as f64 / total as f64;
        for (acc, v) in out.w.iter_mut().zip(&r.model.w) {
            *acc += weight * v;
        }
    }
    Ok(out)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Krum scores: for each reply, the sum of squared distances to its
/// `m - f - 2` nearest other replies.
pub fn krum_scores(replies: &[Reply], f: usize) -> Result<Vec<f64>, FlError> {
    let m = replies.len();
    if m < 2 * f + 3 {
        return Err(FlError::InsufficientResponders { got: m, needed: 2 * f + 3 });
    }
    check_shapes(replies)?;
    let k = m - f - 2;
    Ok((0..m)
        .map(|i| {
            let mut d: Vec<f64> = (0..m)
                .filter(|&j| j != i)
                .map(|j| squared_distance(&replies[i].model.w, &replies[j].model.w))
                .collect();
            d.sort_by(f64::total_cmp);
            d[..k].iter().sum()
        })
        .collect())
}

/// Index (into `replies`) of the minimum Krum score and that reply's weights.
/// Ties go to the lowest index; callers pass replies sorted by party.
pub fn krum_select(replies: &[Reply], f: usize) -> Result<(usize, ModelWeights), FlError> {
    let scores = krum_scores(replies, f)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok((best, replies[best].model.clone()))
}

/// Output of one fusion step.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub model: ModelWeights,
    /// Krum only: position of the chosen reply.
    pub selected_index: Option<usize>,
}

/// Applies the configured fusion routine to party-sorted replies.
pub fn fuse(config: &FusionConfig, replies: &[Reply]) -> Result<FusionOutcome, FlError> {
    match config.algorithm {
        FusionAlgorithm::Fedavg => Ok(FusionOutcome {
            model: fedavg(replies)?,
            selected_index: None,
        }),
        FusionAlgorithm::Krum => {
            let (i, model) = krum_select(replies, config.byzantine_f)?;
            Ok(FusionOutcome {
                model,
                selected_index: Some(i),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reply(party: usize, w: &[f64], n: usize) -> Reply {
        Reply {
            round: 1,
            party,
            model: ModelWeights::new(1, w.len() - 1, w.to_vec()).unwrap(),
            sample_count: n,
        }
    }

    #[test]
    fn fedavg_equal_sizes() {
        let out = fedavg(&[reply(0, &[1.0, 3.0], 10), reply(1, &[3.0, 5.0], 10)]).unwrap();
        assert_eq!(out.w, vec![2.0, 4.0]);
    }

    #[test]
    fn fedavg_weighted_sizes() {
        // 0.703 * [1, 3] + 0.297 * [3, 5]
        let out = fedavg(&[reply(0, &[1.0, 3.0], 703), reply(1, &[3.0, 5.0], 297)]).unwrap();
        assert!((out.w[0] - 1.594).abs() < 1e-12);
        assert!((out.w[1] - 3.594).abs() < 1e-12);
    }

    #[test]
    fn fedavg_single_and_errors() {
        let r = reply(3, &[0.25, -7.5], 9);
        assert_eq!(fedavg(std::slice::from_ref(&r)).unwrap(), r.model);
        assert!(matches!(fedavg(&[]), Err(FlError::EmptyReplies)));
        assert!(fedavg(&[reply(0, &[1.0, 2.0], 1), reply(1, &[1.0, 2.0, 3.0], 1)]).is_err());
    }

    #[test]
    fn fedavg_is_order_independent_bitwise() {
        let a = [reply(0, &[0.1, 0.7], 3), reply(1, &[0.2, 0.3], 5), reply(2, &[0.9, 0.4], 11)];
        let b = [a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(fedavg(&a).unwrap(), fedavg(&b).unwrap());
    }

    #[test]
    fn krum_decimal_example() {
        // In doubles, 0.2's neighbour distances sum to slightly less than
        // 0.1's, so index 2 wins outright.
        let rs: Vec<Reply> = [0.0, 0.1, 0.2, 0.3, 100.0]
            .iter()
            .enumerate()
            .map(|(i, v)| reply(i, &[*v], 1))
            .collect();
        let scores = krum_scores(&rs, 1).unwrap();
        assert!((scores[0] - 0.05).abs() < 1e-12 && (scores[1] - 0.02).abs() < 1e-12);
        assert!((scores[2] - 0.02).abs() < 1e-12 && (scores[3] - 0.05).abs() < 1e-12);
        assert!(scores[4] > 19_000.0);
        assert_eq!(krum_select(&rs, 1).unwrap().0, 2);
    }

    #[test]
    fn krum_exact_tie_goes_to_lower_index() {
        let rs: Vec<Reply> = [0.0, 0.25, 0.5, 0.75, 100.0]
            .iter()
            .enumerate()
            .map(|(i, v)| reply(i, &[*v], 1))
            .collect();
        let scores = krum_scores(&rs, 1).unwrap();
        assert_eq!(scores[1], scores[2]);
        let (i, model) = krum_select(&rs, 1).unwrap();
        assert_eq!(i, 1);
        assert_eq!(model.w, vec![0.25]);
    }

    #[test]
    fn krum_preconditions() {
        let rs: Vec<Reply> = (0..4).map(|i| reply(i, &[i as f64], 1)).collect();
        assert!(matches!(
            krum_select(&rs, 1),
            Err(FlError::InsufficientResponders { got: 4, needed: 5 })
        ));
        let same: Vec<Reply> = (0..5).map(|i| reply(i, &[1.5, -2.0], 1)).collect();
        let (i, model) = krum_select(&same, 1).unwrap();
        assert_eq!(i, 0);
        assert_eq!(model.w, vec![1.5, -2.0]);
    }
}
