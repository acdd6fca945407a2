//! Ranking and selection quality metrics.

use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruth, ResponseVector};
use crate::error::{KnoopError, Result};

/// ROC AUC of `scores` (higher = more important) against a true support,
/// computed as the Mann–Whitney statistic with ties counted one half:
/// `(#{sᵢ > sⱼ} + ½·#{sᵢ = sⱼ}) / (|S|·(p − |S|))` over `i ∈ S, j ∉ S`.
pub fn auc_from_scores(scores: &[f64], support: &[usize]) -> Result<f64> {
    let p = scores.len();
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(KnoopError::NonFinite { row: i, column: 0 });
    }
    let mut positive = vec![false; p];
    for &i in support {
        if i >= p {
            return Err(KnoopError::invalid(format!("support index {i} out of range for {p} scores")));
        }
        positive[i] = true;
    }
    let n_pos = positive.iter().filter(|&&b| b).count();
    if n_pos == 0 || n_pos == p {
        return Err(KnoopError::invalid(format!(
            "AUC needs both relevant and irrelevant variables, got {n_pos} of {p}"
        )));
    }

    // Mid-ranks (1-based) are half-integers, so the rank sum and the
    // resulting U statistic are exact in floating point.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < p {
        let mut end = start + 1;
        while end < p && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum += mid_rank * tied_pos as f64;
        start = end;
    }
    let n_neg = p - n_pos;
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub fdr: f64,
    pub power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
}

/// Per-run false discovery proportion `V / max(R, 1)` and power
/// `TP / |support|` (0 when the support is empty).
pub fn empirical_fdr_power(selected: &[usize], truth: &GroundTruth) -> MetricSet {
    let r = selected.len();
    let true_pos = selected.iter().filter(|&&i| truth.is_relevant(i)).count();
    let v = r - true_pos;
    let fdr = if r > 0 { v as f64 / r as f64 } else { 0.0 };
    let power = if truth.support.is_empty() {
        0.0
    } else {
        true_pos as f64 / truth.support.len() as f64
    };
    MetricSet { fdr, power, mse: None }
}

pub fn mse(y: &ResponseVector, y_hat: &ResponseVector) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(KnoopError::dims(format!("lengths {} and {} differ", y.len(), y_hat.len())));
    }
    if y.is_empty() {
        return Err(KnoopError::invalid("MSE of empty vectors"));
    }
    let ss: f64 = y
        .as_slice()
        .iter()
        .zip(y_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(ss / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        assert_eq!(auc_from_scores(&[0.1, 0.9, 0.8, 0.2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(auc_from_scores(&[0.1, 0.9, 0.8, 0.2], &[0, 3]).unwrap(), 0.0);
    }

    #[test]
    fn all_ties_is_half() {
        assert_eq!(auc_from_scores(&[3.0; 5], &[0, 4]).unwrap(), 0.5);
    }

    #[test]
    fn hand_counted_pairs() {
        let auc = auc_from_scores(&[0.9, 0.1, 0.5, 0.5], &[0, 2]).unwrap();
        assert_eq!(auc, 0.875);
    }

    #[test]
    fn auc_rejects_degenerate_support() {
        assert!(auc_from_scores(&[1.0, 2.0], &[]).is_err());
        assert!(auc_from_scores(&[1.0, 2.0], &[0, 1]).is_err());
        assert!(auc_from_scores(&[1.0, 2.0], &[5]).is_err());
        assert!(auc_from_scores(&[1.0, f64::NAN], &[0]).is_err());
    }

    #[test]
    fn fdr_power_cases() {
        let truth = GroundTruth::from_beta(vec![0.0, 0.3, 0.0, 0.0, 0.7]);
        assert_eq!(truth.support, vec![1, 4]);
        let exact = empirical_fdr_power(&[1, 4], &truth);
        assert_eq!((exact.fdr, exact.power), (0.0, 1.0));
        let none = empirical_fdr_power(&[], &truth);
        assert_eq!((none.fdr, none.power), (0.0, 0.0));
        let mixed = empirical_fdr_power(&[0, 1, 2], &truth);
        assert!((mixed.fdr - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(mixed.power, 0.5);
    }

    #[test]
    fn mse_cases() {
        let a = ResponseVector::from_vec(vec![0.0, 0.0]).unwrap();
        let b = ResponseVector::from_vec(vec![1.0, 1.0]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        let c = ResponseVector::from_vec(vec![1.0]).unwrap();
        assert!(mse(&a, &c).is_err());
    }
}
