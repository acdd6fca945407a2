//! Minimum-norm (ridgeless) least squares and the ridge baseline.
//!
//! None of the solvers fit an intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, ResponseVector};
use crate::error::{KnoopError, Result};

/// Largest row count for which the dual (Gram) route is considered.
pub const DUAL_MAX_ROWS: usize = 2000;
/// The dual route requires more than this many columns per row.
pub const DUAL_MIN_ASPECT: usize = 4;

// Accept the dual Cholesky only when the factor's diagonal spread stays
// within this ratio, i.e. cond(XXᵀ) below roughly 1e12.
const DUAL_CONDITION_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// 0 selects the exact minimum-norm limit.
    pub lambda: f64,
    /// Singular values below `cutoff · σ_max` are treated as zero.
    pub singular_value_cutoff: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.0,
            singular_value_cutoff: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(KnoopError::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.singular_value_cutoff) {
            return Err(KnoopError::invalid(format!(
                "singular value cutoff must lie in [0, 1), got {}",
                self.singular_value_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveRoute {
    /// `β = Xᵀ(XXᵀ)⁻¹y` via Cholesky of the row Gram matrix.
    Dual,
    /// Truncated SVD pseudo-inverse.
    Svd,
    /// Regularized normal equations, primal or dual, whichever is smaller.
    Regularized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgelessFit {
    pub coefficients: DVector<f64>,
    pub residual_norm: f64,
    pub effective_rank: usize,
    pub lambda_used: f64,
    pub route: SolveRoute,
}

fn check_inputs(design: &DataMatrix, y: &ResponseVector) -> Result<()> {
    if design.nrows() != y.len() {
        return Err(KnoopError::dims(format!(
            "design has {} rows but response has {}",
            design.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Least squares with `lambda = 0` meaning the minimum-Euclidean-norm
/// solution (the `λ → 0` limit of ridge). Wide designs with at most
/// [`DUAL_MAX_ROWS`] rows and more than [`DUAL_MIN_ASPECT`] columns per row use
/// the dual form; everything else, and any rank-deficient dual system, goes
/// through the SVD. `lambda > 0` solves `(XᵀX + λI)β = Xᵀy`.
pub fn ridgeless_fit(design: &DataMatrix, y: &ResponseVector, cfg: &SolverConfig) -> Result<RidgelessFit> {
    check_inputs(design, y)?;
    cfg.validate()?;
    let x = design.values();
    let yv = y.values();
    let (n, d) = x.shape();

    let (coefficients, effective_rank, route) = if cfg.lambda > 0.0 {
        let beta = regularized_solve(x, yv, cfg.lambda)?;
        let rank = svd_rank(x, cfg.singular_value_cutoff);
        (beta, rank, SolveRoute::Regularized)
    } else {
        let dual = if n <= DUAL_MAX_ROWS && d > DUAL_MIN_ASPECT * n {
            dual_min_norm(x, yv)
        } else {
            None
        };
        match dual {
            Some(beta) => (beta, n, SolveRoute::Dual),
            None => {
                let (beta, rank) = svd_min_norm(x, yv, cfg.singular_value_cutoff)?;
                (beta, rank, SolveRoute::Svd)
            }
        }
    };

    let residual_norm = (yv - x * &coefficients).norm();
    Ok(RidgelessFit {
        coefficients,
        residual_norm,
        effective_rank,
        lambda_used: cfg.lambda,
        route,
    })
}

fn dual_min_norm(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let gram = x * x.transpose();
    let chol = gram.cholesky()?;
    let diag = chol.l_dirty().diagonal();
    if diag.min() < DUAL_CONDITION_RATIO * diag.max() {
        return None;
    }
    let alpha = chol.solve(y);
    Some(x.tr_mul(&alpha))
}

fn svd_min_norm(x: &DMatrix<f64>, y: &DVector<f64>, cutoff: f64) -> Result<(DVector<f64>, usize)> {
    let svd = x.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let threshold = cutoff * sigma_max;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut uty = u.tr_mul(y);
    let mut rank = 0;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > threshold && *s > 0.0 {
            uty[k] /= s;
            rank += 1;
        } else {
            uty[k] = 0.0;
        }
    }
    if !uty.iter().all(|v| v.is_finite()) {
        return Err(KnoopError::NotPositiveDefinite("SVD produced non-finite coefficients".into()));
    }
    Ok((v_t.tr_mul(&uty), rank))
}

fn svd_rank(x: &DMatrix<f64>, cutoff: f64) -> usize {
    let sv = x.singular_values();
    let threshold = cutoff * sv.max();
    sv.iter().filter(|&&s| s > threshold && s > 0.0).count()
}

/// Solves `(XᵀX + penalty·I)β = Xᵀy`, through `β = Xᵀ(XXᵀ + penalty·I)⁻¹y`
/// when the design has more columns than rows.
fn regularized_solve(x: &DMatrix<f64>, y: &DVector<f64>, penalty: f64) -> Result<DVector<f64>> {
    let (n, d) = x.shape();
    let fail = || KnoopError::NotPositiveDefinite(format!("regularized system with penalty {penalty:e} is singular"));
    if d > n {
        let mut gram = x * x.transpose();
        for i in 0..n {
            gram[(i, i)] += penalty;
        }
        let alpha = gram.cholesky().ok_or_else(fail)?.solve(y);
        Ok(x.tr_mul(&alpha))
    } else {
        let mut gram = x.tr_mul(x);
        for i in 0..d {
            gram[(i, i)] += penalty;
        }
        Ok(gram.cholesky().ok_or_else(fail)?.solve(&x.tr_mul(y)))
    }
}

/// Minimizer of `½‖y − Xβ‖² + λ‖β‖²`, i.e. the solution of
/// `(XᵀX + 2λI)β = Xᵀy`. A `λ'` from the conventional
/// `½‖y − Xβ‖² + ½λ'‖β‖²` form corresponds to `lambda = λ' / 2`.
pub fn ridge_fit(design: &DataMatrix, y: &ResponseVector, lambda: f64) -> Result<DVector<f64>> {
    check_inputs(design, y)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(KnoopError::invalid(format!("ridge lambda must be > 0, got {lambda}")));
    }
    regularized_solve(design.values(), y.values(), 2.0 * lambda)
}

pub fn predict(design: &DataMatrix, beta: &DVector<f64>) -> Result<ResponseVector> {
    if design.ncols() != beta.len() {
        return Err(KnoopError::dims(format!(
            "design has {} columns but beta has {} entries",
            design.ncols(),
            beta.len()
        )));
    }
    ResponseVector::new(design.values() * beta)
}
