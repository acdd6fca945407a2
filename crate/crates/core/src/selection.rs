//! Turning a p-value ranking into a selected set.

use serde::{Deserialize, Serialize};

use crate::dataset::{fisher_yates, Dataset};
use crate::error::{KnoopError, Result};
use crate::evaluation::mse;
use crate::inference::SignificanceReport;
use crate::regression::{predict, ridge_fit};
use crate::rng::rng_from_seed;

/// Ridge penalty of the inner model fitted during cross-validation.
pub const CV_RIDGE_LAMBDA: f64 = 1e-6;
/// Largest contiguous candidate size tried by [`default_cv_candidates`].
pub const CV_MAX_DEFAULT_SIZE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    TopK,
    Bh,
    Cv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelectionParams {
    TopK {
        k: usize,
    },
    Bh {
        alpha: f64,
    },
    Cv {
        folds: usize,
        seed: u64,
        candidate_sizes: Vec<usize>,
        chosen_size: usize,
        validation_mse: Vec<f64>,
    },
}

/// Selected zero-based indices, ordered as in [`SignificanceReport::ranking`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub params: SelectionParams,
    pub selected: Vec<usize>,
}

impl SelectionResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// The `k` variables with the smallest p-values.
pub fn select_top_k(report: &SignificanceReport, k: usize) -> Result<SelectionResult> {
    if k == 0 || k > report.p() {
        return Err(KnoopError::invalid(format!("k must lie in 1..={}, got {k}", report.p())));
    }
    let mut selected = report.ranking();
    selected.truncate(k);
    Ok(SelectionResult {
        method: SelectionMethod::TopK,
        params: SelectionParams::TopK { k },
        selected,
    })
}

/// Benjamini–Hochberg step-up: the `m` smallest p-values for the largest `m`
/// with `p_(m) ≤ m·alpha/p`. May be empty.
pub fn select_bh(report: &SignificanceReport, alpha: f64) -> Result<SelectionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(KnoopError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut order = report.ranking();
    let p = order.len() as f64;
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &i)| report.entries[i].p_value <= (rank + 1) as f64 * alpha / p)
        .map_or(0, |(rank, _)| rank + 1);
    order.truncate(cutoff);
    Ok(SelectionResult {
        method: SelectionMethod::Bh,
        params: SelectionParams::Bh { alpha },
        selected: order,
    })
}

/// `{1, ..., min(p, 30)} ∪ {p}`.
pub fn default_cv_candidates(p: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = (1..=p.min(CV_MAX_DEFAULT_SIZE)).collect();
    if p > CV_MAX_DEFAULT_SIZE {
        sizes.push(p);
    }
    sizes
}

/// Assigns rows to folds by a seeded shuffle: after shuffling, position `i`
/// goes to fold `i mod folds`. Returns the row indices of every fold.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(KnoopError::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if n / folds < 2 {
        return Err(KnoopError::invalid(format!(
            "{n} rows split into {folds} folds leaves fewer than 2 samples per fold"
        )));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    fisher_yates(&mut rng_from_seed(seed), &mut rows);
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (pos, row) in rows.into_iter().enumerate() {
        out[pos % folds].push(row);
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// Mean held-out MSE of a model fitted on each fold's complement.
pub(crate) fn cross_validated_mse(
    folds: &[Vec<usize>],
    n: usize,
    mut fit_and_score: impl FnMut(&[usize], &[usize]) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for held_out in folds {
        let mut is_held = vec![false; n];
        for &r in held_out {
            is_held[r] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&r| !is_held[r]).collect();
        total += fit_and_score(&train, held_out)?;
    }
    Ok(total / folds.len() as f64)
}

/// Chooses how many top-ranked variables to keep by k-fold cross-validated
/// MSE of a ridge fit ([`CV_RIDGE_LAMBDA`]) on those columns. Ties go to the
/// smaller size.
pub fn select_cv(
    data: &Dataset,
    report: &SignificanceReport,
    folds: usize,
    candidate_sizes: &[usize],
    seed: u64,
) -> Result<SelectionResult> {
    let p = report.p();
    if data.p() != p {
        return Err(KnoopError::dims(format!("report covers {p} variables, data has {}", data.p())));
    }
    let mut sizes = candidate_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(KnoopError::invalid("no candidate sizes"));
    }
    if let Some(&bad) = sizes.iter().find(|&&m| m == 0 || m > p) {
        return Err(KnoopError::invalid(format!("candidate size {bad} outside 1..={p}")));
    }
    let n = data.n();
    let assignment = fold_assignment(n, folds, seed)?;
    let ranking = report.ranking();

    let mut scores = Vec::with_capacity(sizes.len());
    for &m in &sizes {
        let columns = &ranking[..m];
        let x = data.x.select_columns(columns)?;
        let score = cross_validated_mse(&assignment, n, |train, test| {
            let beta = ridge_fit(&x.select_rows(train), &data.y.select_rows(train), CV_RIDGE_LAMBDA)?;
            let y_hat = predict(&x.select_rows(test), &beta)?;
            mse(&data.y.select_rows(test), &y_hat)
        })?;
        scores.push(score);
    }

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    let chosen = sizes[best];
    Ok(SelectionResult {
        method: SelectionMethod::Cv,
        params: SelectionParams::Cv {
            folds,
            seed,
            candidate_sizes: sizes,
            chosen_size: chosen,
            validation_mse: scores,
        },
        selected: ranking[..chosen].to_vec(),
    })
}
