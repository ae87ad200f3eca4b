//! Ranking metrics and thresholds.

use crate::{Error, Result};

/// Scores with 0 (nominal) / 1 (anomalous) labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredDataset {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ScoredDataset {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::dim(
                "scored dataset",
                format!("{} scores, {} labels", scores.len(), labels.len()),
            ));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Numeric("NaN score".into()));
        }
        Ok(Self { scores, labels })
    }
}

/// Area under the ROC curve: the share of (anomalous, nominal) pairs in which
/// the anomalous point scores higher, ties counting one half. Computed from
/// mid-ranks in `O(n log n)`.
pub fn roc_auc(sd: &ScoredDataset) -> Result<f64> {
    let n_pos = sd.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = sd.labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Contract(
            "AUC needs both nominal and anomalous points".into(),
        ));
    }
    let mut order: Vec<usize> = (0..sd.scores.len()).collect();
    order.sort_by(|&a, &b| sd.scores[a].total_cmp(&sd.scores[b]));
    // twice the rank sum of the anomalous points, kept integral
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && sd.scores[order[end]] == sd.scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share the mid-rank (start + 1 + end) / 2
        let positives = order[start..end]
            .iter()
            .filter(|&&i| sd.labels[i] == 1)
            .count() as u128;
        twice_rank_sum += positives * (start + 1 + end) as u128;
        start = end;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    // U = R − p(p+1)/2 ; doubled to stay in integers
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * q) as f64)
}

/// Share of `reference` strictly below `score`, ties counting one half.
pub fn rank_fraction(score: f64, reference: &[f64]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Contract("empty reference set".into()));
    }
    let below = reference.iter().filter(|&&r| r < score).count();
    let ties = reference.iter().filter(|&&r| r == score).count();
    Ok((2 * below + ties) as f64 / (2 * reference.len()) as f64)
}

/// `(1 − γ)`-quantile of the training scores, interpolating linearly at
/// position `(n − 1)(1 − γ)` of the sorted scores.
pub fn threshold_from_quantile(train_scores: &[f64], gamma: f64) -> Result<f64> {
    if train_scores.is_empty() {
        return Err(Error::Contract("no training scores".into()));
    }
    if !(0.0..0.5).contains(&gamma) {
        return Err(Error::Contract(format!("gamma {gamma} outside [0, 0.5)")));
    }
    let mut s = train_scores.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = (s.len() - 1) as f64 * (1.0 - gamma);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(s[lo] + (pos - lo as f64) * (s[hi] - s[lo]))
}

/// Mean and 95% half-width `1.96 · s / √n` with the sample standard deviation.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn auc(scores: &[f64], labels: &[u8]) -> f64 {
        roc_auc(&ScoredDataset::new(scores.to_vec(), labels.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.9], &[0, 1]), 1.0);
        assert_eq!(auc(&[2.0; 5], &[0, 1, 0, 1, 1]), 0.5);
        assert_eq!(auc(&[3.0, 1.0, 2.0, 4.0], &[0, 0, 1, 1]), 0.75);
        assert!(roc_auc(&ScoredDataset::new(vec![1.0], vec![1]).unwrap()).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_fraction(9.0, &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rank_fraction(2.0, &[2.0, 2.0, 2.0]).unwrap(), 0.5);
        assert_eq!(rank_fraction(2.5, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.5);
        assert!(rank_fraction(0.0, &[]).is_err());
    }

    #[test]
    fn quantile_examples() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(threshold_from_quantile(&s, 0.0).unwrap(), 100.0);
        assert!((threshold_from_quantile(&s, 0.10).unwrap() - 90.1).abs() < 1e-12);
        let t = threshold_from_quantile(&s, 0.10).unwrap();
        assert_eq!(s.iter().filter(|&&v| v > t).count(), 10);
        assert!(threshold_from_quantile(&[], 0.1).is_err());
    }

    #[test]
    fn confidence_interval() {
        let (m, h) = mean_ci95(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_ci95(&[4.0]), (4.0, 0.0));
    }
}
