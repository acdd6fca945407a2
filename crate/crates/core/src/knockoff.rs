//! Second-order Gaussian knockoffs and the recursive multi-layered ensemble.
//!
//! A fitted [`GaussianModel`] keeps its covariance in spectral form: `r`
//! eigenpairs plus, when `r < d`, a constant eigenvalue on the orthogonal
//! complement. Under the equicorrelated construction `D = s·I`, both the
//! conditional mean shift `s·Σ⁻¹` and the conditional covariance
//! `2sI − s²Σ⁻¹` are functions of Σ, so knockoff sampling needs no dense
//! `d × d` factorization. For `d ≥ n` the nonzero spectrum of the sample
//! covariance comes from the `n × n` Gram matrix, which keeps deep layers
//! (thousands of columns, a hundred rows) cheap.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, standard_normal_rows, DataMatrix};
use crate::error::{KnoopError, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Shrinkage weights tried, in order, by [`ShrinkagePolicy::Auto`].
pub const AUTO_SHRINKAGE_GRID: [f64; 7] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 0.3, 0.5];

/// Smallest eigenvalue accepted by the auto policy, relative to `trace/d`.
pub const AUTO_MIN_EIGENVALUE: f64 = 1e-6;

/// Smallest eigenvalue any fitted model may have, relative to `trace/d`.
pub const MIN_EIGENVALUE: f64 = 1e-10;

/// Tolerated negative eigenvalue of the conditional covariance before clamping.
pub const PSD_TOLERANCE: f64 = 1e-8;

// Gram eigenvalues below this fraction of the largest are treated as zero.
const GRAM_RANK_TOLERANCE: f64 = 1e-10;

/// How the covariance estimate is shrunk toward `trace(S)/d · I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShrinkagePolicy {
    Fixed(f64),
    /// Smallest weight from [`AUTO_SHRINKAGE_GRID`] that makes the estimate
    /// numerically invertible.
    #[default]
    Auto,
    /// Ledoit–Wolf estimate of the mean-squared-error optimal weight, raised
    /// to the [`ShrinkagePolicy::Auto`] weight when that is larger.
    LedoitWolf,
}

impl std::str::FromStr for ShrinkagePolicy {
    type Err = KnoopError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ShrinkagePolicy::Auto);
        }
        if s.eq_ignore_ascii_case("ledoit-wolf") || s.eq_ignore_ascii_case("ledoit_wolf") {
            return Ok(ShrinkagePolicy::LedoitWolf);
        }
        let gamma: f64 = s.parse().map_err(|_| {
            KnoopError::invalid(format!("shrinkage must be 'auto', 'ledoit-wolf' or a number, got {s:?}"))
        })?;
        if !(0.0..=1.0).contains(&gamma) {
            return Err(KnoopError::invalid(format!("shrinkage must lie in [0, 1], got {gamma}")));
        }
        Ok(ShrinkagePolicy::Fixed(gamma))
    }
}

/// Symmetric matrix `V·diag(values)·Vᵀ + floor·(I − V·Vᵀ)`.
#[derive(Debug, Clone)]
struct Spectrum {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    floor: f64,
}

impl Spectrum {
    fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    fn is_complete(&self) -> bool {
        self.vectors.ncols() == self.vectors.nrows()
    }

    fn min_eigenvalue(&self) -> f64 {
        let m = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        if self.is_complete() {
            m
        } else {
            m.min(self.floor)
        }
    }

    /// Right-multiplies the rows of `m` by `f(Σ)`.
    fn apply_rows(&self, m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let projected = m * &self.vectors;
        if self.is_complete() {
            let scaled = scale_columns(projected, |k| f(self.values[k]));
            scaled * self.vectors.transpose()
        } else {
            let base = f(self.floor);
            let scaled = scale_columns(projected, |k| f(self.values[k]) - base);
            let mut out = m * base;
            out.gemm(1.0, &scaled, &self.vectors.transpose(), 1.0);
            out
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let floor = if self.is_complete() { 0.0 } else { self.floor };
        let scaled = scale_columns(self.vectors.clone(), |k| self.values[k] - floor);
        let mut out = DMatrix::identity(d, d) * floor;
        out.gemm(1.0, &scaled, &self.vectors.transpose(), 1.0);
        out.fill_lower_triangle_with_upper_triangle();
        out
    }
}

fn scale_columns(mut m: DMatrix<f64>, f: impl Fn(usize) -> f64) -> DMatrix<f64> {
    for (k, mut col) in m.column_iter_mut().enumerate() {
        col *= f(k);
    }
    m
}

/// Gaussian model of the rows of a data matrix together with the uniform
/// equicorrelated knockoff parameter `s`.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    mean: DVector<f64>,
    spectrum: Spectrum,
    diagonal: DVector<f64>,
    shrinkage_gamma: f64,
    s: f64,
}

impl GaussianModel {
    /// Model with a given mean and covariance (no shrinkage).
    pub fn from_covariance(mean: DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || covariance.shape() != (d, d) {
            return Err(KnoopError::dims(format!(
                "covariance is {:?} for mean of length {d}",
                covariance.shape()
            )));
        }
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-10 {
                    return Err(KnoopError::invalid(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let diagonal = covariance.diagonal();
        let eig = SymmetricEigen::new(covariance.clone());
        let spectrum = Spectrum {
            floor: eig.eigenvalues.min(),
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        };
        Self::finish(mean, spectrum, diagonal, 0.0)
    }

    fn finish(mean: DVector<f64>, spectrum: Spectrum, diagonal: DVector<f64>, gamma: f64) -> Result<Self> {
        let scale = (diagonal.sum() / diagonal.len() as f64).max(f64::MIN_POSITIVE);
        let lambda_min = spectrum.min_eigenvalue();
        if lambda_min < MIN_EIGENVALUE * scale {
            return Err(KnoopError::NotPositiveDefinite(format!(
                "covariance has minimum eigenvalue {lambda_min:.3e} (shrinkage {gamma}); a larger shrinkage is required"
            )));
        }
        let s = (2.0 * lambda_min).min(diagonal.min());
        Ok(GaussianModel {
            mean,
            spectrum,
            diagonal,
            shrinkage_gamma: gamma,
            s,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn shrinkage_gamma(&self) -> f64 {
        self.shrinkage_gamma
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.min_eigenvalue()
    }

    /// The common value of every entry of the `s` vector.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn s_vector(&self) -> Vec<f64> {
        vec![self.s; self.dim()]
    }

    pub fn variances(&self) -> &DVector<f64> {
        &self.diagonal
    }

    /// Dense covariance; `O(d²)` memory.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.spectrum.dense()
    }

    /// Smallest eigenvalue of `2D − DΣ⁻¹D`, before any clamping.
    pub fn conditional_min_eigenvalue(&self) -> f64 {
        let s = self.s;
        let c = |mu: f64| 2.0 * s - s * s / mu;
        let m = self.spectrum.values.iter().map(|&mu| c(mu)).fold(f64::INFINITY, f64::min);
        if self.spectrum.is_complete() {
            m
        } else {
            m.min(c(self.spectrum.floor))
        }
    }
}

/// Fits mean and shrunk covariance `(1−γ)·S + γ·(trace(S)/d)·I` to the rows of `m`.
pub fn fit_gaussian(m: &DataMatrix, policy: ShrinkagePolicy) -> Result<GaussianModel> {
    fit_values(m.values(), m.labels(), policy)
}

fn fit_values(x: &DMatrix<f64>, labels: &[String], policy: ShrinkagePolicy) -> Result<GaussianModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(KnoopError::invalid(format!("need at least 2 rows to fit a covariance, got {n}")));
    }
    let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.mean()));
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let denom = (n - 1) as f64;
    let variances = DVector::from_iterator(d, centered.column_iter().map(|c| c.norm_squared() / denom));
    for j in 0..d {
        let magnitude = x.column(j).amax();
        if variances[j] == 0.0 || variances[j].sqrt() <= 1e-14 * magnitude {
            return Err(KnoopError::ConstantColumn {
                index: j,
                label: labels.get(j).cloned().unwrap_or_default(),
            });
        }
    }
    let avg_var = variances.sum() / d as f64;

    let cross_norm_sq;
    let (vectors, sample_values) = if d < n {
        let cov = centered.tr_mul(&centered) / denom;
        cross_norm_sq = cov.norm_squared();
        let eig = SymmetricEigen::new(cov);
        (eig.eigenvectors, eig.eigenvalues.map(|v| v.max(0.0)))
    } else {
        let gram = (&centered * centered.transpose()) / denom;
        cross_norm_sq = gram.norm_squared();
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.max();
        let keep: Vec<usize> = (0..n)
            .filter(|&k| eig.eigenvalues[k] > GRAM_RANK_TOLERANCE * top)
            .collect();
        let u = eig.eigenvectors.select_columns(&keep);
        let vals = DVector::from_iterator(keep.len(), keep.iter().map(|&k| eig.eigenvalues[k]));
        let v = centered.tr_mul(&u);
        let v = scale_columns(v, |k| 1.0 / (denom * vals[k]).sqrt());
        (v, vals)
    };
    let complete = vectors.ncols() == d;
    let sample_min = if complete { sample_values.min() } else { 0.0 };

    let auto = || {
        AUTO_SHRINKAGE_GRID
            .iter()
            .copied()
            .find(|&g| (1.0 - g) * sample_min + g * avg_var >= AUTO_MIN_EIGENVALUE * avg_var)
            .unwrap_or(AUTO_SHRINKAGE_GRID[AUTO_SHRINKAGE_GRID.len() - 1])
    };
    let gamma = match policy {
        ShrinkagePolicy::Fixed(g) => {
            if !(0.0..=1.0).contains(&g) {
                return Err(KnoopError::invalid(format!("shrinkage must lie in [0, 1], got {g}")));
            }
            g
        }
        ShrinkagePolicy::Auto => auto(),
        ShrinkagePolicy::LedoitWolf => {
            ledoit_wolf_weight(&centered, cross_norm_sq * denom * denom).max(auto())
        }
    };

    let target = gamma * avg_var;
    let values = sample_values.map(|v| (1.0 - gamma) * v + target);
    let floor = if complete { values.min() } else { target };
    let diagonal = variances.map(|v| (1.0 - gamma) * v + target);
    GaussianModel::finish(mean, Spectrum { vectors, values, floor }, diagonal, gamma)
}

/// Ledoit–Wolf shrinkage weight toward `trace/d · I` for centered rows,
/// with moments normalized by `n`. `cross_norm_sq` is `‖XᵀX‖²_F`, which equals
/// `‖XXᵀ‖²_F` and so is available from either Gram form.
pub(crate) fn ledoit_wolf_weight(centered: &DMatrix<f64>, cross_norm_sq: f64) -> f64 {
    let (n, d) = centered.shape();
    let (nf, df) = (n as f64, d as f64);
    let row_norms_sq: Vec<f64> = centered.row_iter().map(|r| r.norm_squared()).collect();
    let trace = row_norms_sq.iter().sum::<f64>() / nf;
    let mu = trace / df;
    let fourth: f64 = row_norms_sq.iter().map(|v| v * v).sum();
    let cov_norm_sq = cross_norm_sq / (nf * nf);
    let delta = (cov_norm_sq - 2.0 * mu * trace + df * mu * mu) / df;
    let beta = ((fourth / nf - cov_norm_sq) / (df * nf)).min(delta);
    if delta <= 0.0 {
        0.0
    } else {
        (beta / delta).clamp(0.0, 1.0)
    }
}

/// Samples one knockoff copy of `m` from the model's conditional distribution
/// `N(x − (x − μ)Σ⁻¹D, 2D − DΣ⁻¹D)`. Columns are labelled `<label>_ko`.
pub fn compute_knockoff(m: &DataMatrix, model: &GaussianModel, seed: u64) -> Result<DataMatrix> {
    let values = knockoff_values(m.values(), model, seed)?;
    let labels = m.labels().iter().map(|l| format!("{l}_ko")).collect();
    DataMatrix::new(values, labels)
}

fn knockoff_values(x: &DMatrix<f64>, model: &GaussianModel, seed: u64) -> Result<DMatrix<f64>> {
    let (n, d) = x.shape();
    if d != model.dim() {
        return Err(KnoopError::dims(format!("data has {d} columns but model has {}", model.dim())));
    }
    let cond_min = model.conditional_min_eigenvalue();
    if cond_min < -PSD_TOLERANCE * model.s.max(1.0) {
        return Err(KnoopError::NotPositiveDefinite(format!(
            "conditional covariance has eigenvalue {cond_min:.3e}"
        )));
    }
    let s = model.s;
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-model.mean[j]);
    }
    let shift = model.spectrum.apply_rows(&centered, |mu| s / mu);

    let mut rng = rng_from_seed(seed);
    let z = standard_normal_rows(&mut rng, n, d);
    let noise = model
        .spectrum
        .apply_rows(&z, |mu| (2.0 * s - s * s / mu).max(0.0).sqrt());

    Ok(x - shift + noise)
}

/// Summary of the model fitted at one recursion layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub input_columns: usize,
    pub shrinkage_gamma: f64,
    pub lambda_min: f64,
    pub s: f64,
    pub conditional_min_eigenvalue: f64,
}

/// `[X | K̃_1 | ... | K̃_kmax]` with `k_max = 2^ell_max − 1` knockoff sets of
/// `p` columns each. Layer `ℓ` contributes sets `2^(ℓ−1) .. 2^ℓ − 1`; set
/// `2^(ℓ−1) + b` is the knockoff of block `b` of the previous layer's matrix
/// (block 0 being X itself).
#[derive(Debug, Clone)]
pub struct KnockoffEnsemble {
    matrix: DataMatrix,
    p: usize,
    ell_max: usize,
    layers: Vec<LayerSummary>,
}

impl KnockoffEnsemble {
    pub fn matrix(&self) -> &DataMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DataMatrix {
        self.matrix
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn k_max(&self) -> usize {
        (1 << self.ell_max) - 1
    }

    pub fn layers(&self) -> &[LayerSummary] {
        &self.layers
    }

    /// Generation layer of knockoff set `k` (1-based), `None` if out of range.
    pub fn layer_of_set(&self, k: usize) -> Option<usize> {
        (1..=self.k_max()).contains(&k).then(|| set_layer(k))
    }

    /// Block that set `k` is a knockoff of; 0 denotes the original variables.
    pub fn parent_of_set(&self, k: usize) -> Option<usize> {
        self.layer_of_set(k).map(|l| k - (1 << (l - 1)))
    }

    /// Column range of block `k` (0 = original variables).
    pub fn set_columns(&self, k: usize) -> std::ops::Range<usize> {
        k * self.p..(k + 1) * self.p
    }

    /// The offset `s` such that `Cov(X_j, K̃_{k,j}) = Σ_jj − s` under the
    /// fitted models: the layer's `s` when set `k` copies X directly,
    /// otherwise inherited from the block it copies.
    pub fn effective_s(&self, k: usize) -> Option<f64> {
        let layer = self.layer_of_set(k)?;
        let parent = k - (1 << (layer - 1));
        if parent == 0 {
            Some(self.layers[layer - 1].s)
        } else {
            self.effective_s(parent)
        }
    }

    /// Writes the ensemble as CSV with its column labels as header.
    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let header: Vec<&str> = self.matrix.labels().iter().map(String::as_str).collect();
        let v = self.matrix.values();
        let rows: Vec<Vec<String>> = (0..v.nrows())
            .map(|i| v.row(i).iter().map(|x| format!("{x:?}")).collect())
            .collect();
        dataset::write_csv(path.as_ref(), &header, &rows)
    }
}

fn set_layer(k: usize) -> usize {
    (usize::BITS - k.leading_zeros()) as usize
}

pub const MAX_LAYERS: usize = 12;

/// Builds `K¹ = [X | κ¹]`, `K^{ℓ+1} = [K^ℓ | κ^{ℓ+1}]` where each `κ` is a
/// knockoff of the whole current matrix under a freshly fitted model. Layer
/// `ℓ` samples with seed `derive_seed(seed, [ℓ])`.
///
/// The first `p` ensemble columns keep the input labels; knockoff columns
/// are labelled `ko{k}_{i}` with 1-based set and variable numbers.
pub fn recursive_knockoff(
    x: &DataMatrix,
    ell_max: usize,
    seed: u64,
    policy: ShrinkagePolicy,
) -> Result<KnockoffEnsemble> {
    if !(1..=MAX_LAYERS).contains(&ell_max) {
        return Err(KnoopError::invalid(format!("ell_max must lie in 1..={MAX_LAYERS}, got {ell_max}")));
    }
    let (n, p) = (x.nrows(), x.ncols());
    let total = p << ell_max;
    let mut buffer = Vec::with_capacity(n * total);
    buffer.extend_from_slice(x.values().as_slice());
    let mut labels: Vec<String> = x.labels().to_vec();
    let mut layers = Vec::with_capacity(ell_max);

    for layer in 1..=ell_max {
        let width = buffer.len() / n;
        let current = DMatrix::from_column_slice(n, width, &buffer);
        let stage = |e: KnoopError| e.in_stage(format!("knockoff layer {layer}"));
        let model = fit_values(&current, &labels, policy).map_err(stage)?;
        let kappa = knockoff_values(&current, &model, derive_seed(seed, &[layer as u64])).map_err(stage)?;
        drop(current);
        layers.push(LayerSummary {
            layer,
            input_columns: width,
            shrinkage_gamma: model.shrinkage_gamma(),
            lambda_min: model.lambda_min(),
            s: model.s(),
            conditional_min_eigenvalue: model.conditional_min_eigenvalue(),
        });
        buffer.extend_from_slice(kappa.as_slice());
        let first_set = 1 << (layer - 1);
        for k in first_set..(first_set << 1) {
            labels.extend((1..=p).map(|i| format!("ko{k}_{i}")));
        }
    }

    let values = DMatrix::from_vec(n, total, buffer);
    let matrix = DataMatrix::new(values, labels)?;
    Ok(KnockoffEnsemble {
        matrix,
        p,
        ell_max,
        layers,
    })
}

/// Covariance the diagnostics compare against.
#[derive(Debug, Clone)]
pub enum ReferenceCovariance {
    Known(DMatrix<f64>),
    /// Sample covariance of the original columns.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDiagnostics {
    pub set: usize,
    pub layer: usize,
    pub parent: usize,
    pub s_effective: f64,
    /// max |Cov(K̃_k) − Σ|
    pub dev_cov_knockoff: f64,
    /// max over i ≠ j of |Cov(X_i, K̃_{k,j}) − Σ_ij|
    pub dev_cross_offdiag: f64,
    /// max over j of |Cov(X_j, K̃_{k,j}) − (Σ_jj − s)|
    pub dev_cross_diag: f64,
}

/// Empirical second-moment deviations of an ensemble. Reporting only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoffDiagnostics {
    pub n: usize,
    pub p: usize,
    pub ell_max: usize,
    pub k_max: usize,
    pub max_abs_dev_cov_knockoff: f64,
    pub max_abs_dev_cross: f64,
    /// max over j and set pairs of |Var(K̃_{k,j}) − Var(K̃_{k',j})|
    pub max_abs_dev_between_sets: f64,
    pub layers: Vec<LayerSummary>,
    pub per_set_results: Vec<SetDiagnostics>,
}

pub fn exchangeability_check(ens: &KnockoffEnsemble, reference: &ReferenceCovariance) -> Result<KnockoffDiagnostics> {
    let v = ens.matrix.values();
    let (n, p) = (v.nrows(), ens.p);
    if n < 2 {
        return Err(KnoopError::invalid("need at least 2 rows for covariance diagnostics"));
    }
    let denom = (n - 1) as f64;
    let centered_block = |k: usize| {
        let mut b = v.columns(k * p, p).into_owned();
        for mut col in b.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        b
    };
    let x0 = centered_block(0);
    let sigma = match reference {
        ReferenceCovariance::Known(s) => {
            if s.shape() != (p, p) {
                return Err(KnoopError::dims(format!("reference covariance is {:?}, expected {p}x{p}", s.shape())));
            }
            s.clone()
        }
        ReferenceCovariance::Estimate => x0.tr_mul(&x0) / denom,
    };

    let mut per_set = Vec::with_capacity(ens.k_max());
    let mut variances: Vec<DVector<f64>> = Vec::with_capacity(ens.k_max());
    for k in 1..=ens.k_max() {
        let b = centered_block(k);
        let cov_kk = b.tr_mul(&b) / denom;
        let cross = x0.tr_mul(&b) / denom;
        let s_eff = ens.effective_s(k).unwrap_or(0.0);
        let dev_cov = (&cov_kk - &sigma).amax();
        let mut off = 0.0_f64;
        let mut diag = 0.0_f64;
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    diag = diag.max((cross[(j, j)] - (sigma[(j, j)] - s_eff)).abs());
                } else {
                    off = off.max((cross[(i, j)] - sigma[(i, j)]).abs());
                }
            }
        }
        variances.push(cov_kk.diagonal());
        let layer = set_layer(k);
        per_set.push(SetDiagnostics {
            set: k,
            layer,
            parent: k - (1 << (layer - 1)),
            s_effective: s_eff,
            dev_cov_knockoff: dev_cov,
            dev_cross_offdiag: off,
            dev_cross_diag: diag,
        });
    }

    let mut between = 0.0_f64;
    for a in 0..variances.len() {
        for b in a + 1..variances.len() {
            between = between.max((&variances[a] - &variances[b]).amax());
        }
    }

    Ok(KnockoffDiagnostics {
        n,
        p,
        ell_max: ens.ell_max,
        k_max: ens.k_max(),
        max_abs_dev_cov_knockoff: per_set.iter().map(|s| s.dev_cov_knockoff).fold(0.0, f64::max),
        max_abs_dev_cross: per_set
            .iter()
            .map(|s| s.dev_cross_offdiag.max(s.dev_cross_diag))
            .fold(0.0, f64::max),
        max_abs_dev_between_sets: between,
        layers: ens.layers.clone(),
        per_set_results: per_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ar1_covariance, sample_mvn};

    fn gaussian(n: usize, cov: &DMatrix<f64>, seed: u64) -> DataMatrix {
        sample_mvn(n, &DVector::zeros(cov.nrows()), cov, seed).unwrap()
    }

    fn sample_cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let center = |m: &DMatrix<f64>| {
            let mut c = m.clone();
            for mut col in c.column_iter_mut() {
                let mu = col.mean();
                col.add_scalar_mut(-mu);
            }
            c
        };
        center(a).tr_mul(&center(b)) / (a.nrows() - 1) as f64
    }

    fn trig_matrix(n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |i, j| {
            let (fi, fj) = (i as f64, j as f64);
            let shared = if j % 2 == 0 { 2.0 * (0.9 * fi).sin() } else { 0.0 };
            (1.3 * fi + 0.7 * fj * fj).sin() + 0.5 * (fi * fj).cos() + shared
        })
    }

    // Reference weights from scikit-learn's ledoit_wolf_shrinkage on the same matrices.
    #[test]
    fn ledoit_wolf_weight_matches_reference() {
        for (n, d, expected) in [
            (30, 4, 0.09782569272814763),
            (8, 12, 0.2177910535911872),
            (40, 6, 0.05391449497722677),
        ] {
            let x = DataMatrix::with_default_labels(trig_matrix(n, d)).unwrap();
            let model = fit_gaussian(&x, ShrinkagePolicy::LedoitWolf).unwrap();
            assert!(
                (model.shrinkage_gamma() - expected).abs() < 1e-12,
                "n={n} d={d}: {} vs {expected}",
                model.shrinkage_gamma()
            );
        }
    }

    #[test]
    fn shrinkage_policy_parses() {
        assert_eq!("auto".parse::<ShrinkagePolicy>().unwrap(), ShrinkagePolicy::Auto);
        assert_eq!("ledoit-wolf".parse::<ShrinkagePolicy>().unwrap(), ShrinkagePolicy::LedoitWolf);
        assert_eq!("0.25".parse::<ShrinkagePolicy>().unwrap(), ShrinkagePolicy::Fixed(0.25));
        assert!("1.5".parse::<ShrinkagePolicy>().is_err());
        assert!("lw".parse::<ShrinkagePolicy>().is_err());
    }

    #[test]
    fn large_sample_fit_recovers_identity() {
        let x = gaussian(50_000, &DMatrix::identity(3, 3), 2);
        let model = fit_gaussian(&x, ShrinkagePolicy::Fixed(0.0)).unwrap();
        assert!((model.covariance() - DMatrix::identity(3, 3)).amax() < 0.02);
    }

    #[test]
    fn auto_policy_shrinks_rank_deficient_fit() {
        let x = gaussian(10, &DMatrix::identity(40, 40), 3);
        assert!(fit_gaussian(&x, ShrinkagePolicy::Fixed(0.0)).is_err());
        let model = fit_gaussian(&x, ShrinkagePolicy::Auto).unwrap();
        assert!(model.shrinkage_gamma() > 0.0);
        let avg = model.variances().sum() / 40.0;
        assert!(model.lambda_min() >= AUTO_MIN_EIGENVALUE * avg * 0.999);
        assert!(model.s() <= 2.0 * model.lambda_min() + 1e-15);
    }

    #[test]
    fn gram_route_matches_dense_covariance() {
        let x = gaussian(12, &ar1_covariance(30, 0.4).unwrap(), 4);
        let model = fit_gaussian(&x, ShrinkagePolicy::Fixed(0.1)).unwrap();
        let s = sample_cov(x.values(), x.values());
        let avg = s.trace() / 30.0;
        let expected = &s * 0.9 + DMatrix::identity(30, 30) * (0.1 * avg);
        assert!((model.covariance() - expected).amax() < 1e-10);
    }

    #[test]
    fn identity_covariance_gives_unit_s() {
        let model = GaussianModel::from_covariance(DVector::zeros(4), &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(model.s_vector(), vec![1.0; 4]);
    }

    #[test]
    fn constant_column_reported() {
        let mut v = gaussian(20, &DMatrix::identity(3, 3), 5).into_values();
        v.column_mut(2).fill(4.0);
        let x = DataMatrix::with_default_labels(v).unwrap();
        match fit_gaussian(&x, ShrinkagePolicy::Auto) {
            Err(KnoopError::ConstantColumn { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_model_knockoffs_are_independent() {
        let x = gaussian(50_000, &DMatrix::identity(3, 3), 6);
        let model = GaussianModel::from_covariance(DVector::zeros(3), &DMatrix::identity(3, 3)).unwrap();
        let ko = compute_knockoff(&x, &model, 9).unwrap();
        let cross = sample_cov(x.values(), ko.values());
        assert!(cross.amax() < 0.02);
        let own = sample_cov(ko.values(), ko.values());
        assert!((own - DMatrix::identity(3, 3)).amax() < 0.02);
    }

    #[test]
    fn knockoff_moments_match_ar1() {
        let sigma = ar1_covariance(5, 0.25).unwrap();
        let x = gaussian(50_000, &sigma, 7);
        let model = GaussianModel::from_covariance(DVector::zeros(5), &sigma).unwrap();
        let ko = compute_knockoff(&x, &model, 10).unwrap();
        let own = sample_cov(ko.values(), ko.values());
        assert!((&own - &sigma).amax() < 0.02, "{}", (&own - &sigma).amax());
        let cross = sample_cov(x.values(), ko.values());
        for j in 0..5 {
            assert!((cross[(j, j)] - (sigma[(j, j)] - model.s())).abs() < 0.02);
        }
    }

    #[test]
    fn knockoff_is_deterministic_and_distinct() {
        let x = gaussian(60, &ar1_covariance(8, 0.3).unwrap(), 8);
        let model = fit_gaussian(&x, ShrinkagePolicy::Auto).unwrap();
        let a = compute_knockoff(&x, &model, 1).unwrap();
        let b = compute_knockoff(&x, &model, 1).unwrap();
        assert_eq!(a, b);
        for j in 0..8 {
            let xc = x.values().column(j).add_scalar(-x.values().column(j).mean());
            let kc = a.values().column(j).add_scalar(-a.values().column(j).mean());
            let corr = xc.dot(&kc) / (xc.norm() * kc.norm());
            assert!(corr < 1.0 - 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = gaussian(20, &DMatrix::identity(3, 3), 1);
        let model = GaussianModel::from_covariance(DVector::zeros(2), &DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(compute_knockoff(&x, &model, 1), Err(KnoopError::DimensionMismatch(_))));
    }

    #[test]
    fn ensemble_layout() {
        let x = gaussian(100, &ar1_covariance(10, 0.25).unwrap(), 11);
        let ens = recursive_knockoff(&x, 3, 5, ShrinkagePolicy::Auto).unwrap();
        assert_eq!(ens.matrix().ncols(), 80);
        assert_eq!(ens.k_max(), 7);
        assert_eq!(ens.matrix().values().columns(0, 10), x.values().columns(0, 10));
        assert_eq!(ens.matrix().labels()[10], "ko1_1");
        assert_eq!(ens.matrix().labels()[79], "ko7_10");
        let layers: Vec<_> = (1..=7).map(|k| ens.layer_of_set(k).unwrap()).collect();
        assert_eq!(layers, vec![1, 2, 2, 3, 3, 3, 3]);
        assert_eq!(ens.layer_of_set(0), None);
        assert_eq!(ens.layer_of_set(8), None);
        assert_eq!(ens.parent_of_set(3), Some(1));
        assert_eq!(ens.parent_of_set(6), Some(2));
    }

    #[test]
    fn single_layer_ensemble() {
        let x = gaussian(50, &DMatrix::identity(4, 4), 12);
        let ens = recursive_knockoff(&x, 1, 1, ShrinkagePolicy::Auto).unwrap();
        assert_eq!(ens.matrix().ncols(), 8);
        assert_eq!(ens.matrix().values().columns(0, 4), x.values().columns(0, 4));
        assert!(recursive_knockoff(&x, 0, 1, ShrinkagePolicy::Auto).is_err());
    }

    #[test]
    fn two_layer_set_mapping() {
        let x = gaussian(30, &DMatrix::identity(3, 3), 13);
        let ens = recursive_knockoff(&x, 2, 1, ShrinkagePolicy::Auto).unwrap();
        assert_eq!(ens.layer_of_set(1), Some(1));
        assert_eq!(ens.layer_of_set(2), Some(2));
        assert_eq!(ens.layer_of_set(3), Some(2));
        assert_eq!(ens.set_columns(2), 6..9);
    }

    #[test]
    fn ensemble_deterministic() {
        let x = gaussian(40, &ar1_covariance(6, 0.25).unwrap(), 14);
        let a = recursive_knockoff(&x, 2, 3, ShrinkagePolicy::Auto).unwrap();
        let b = recursive_knockoff(&x, 2, 3, ShrinkagePolicy::Auto).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn deep_wide_layers_stay_psd() {
        let x = gaussian(30, &ar1_covariance(40, 0.1).unwrap(), 15);
        let ens = recursive_knockoff(&x, 3, 4, ShrinkagePolicy::Auto).unwrap();
        for layer in ens.layers() {
            assert!(layer.conditional_min_eigenvalue >= -PSD_TOLERANCE);
            assert!(layer.s > 0.0);
        }
    }

    #[test]
    fn small_sample_diagnostics_are_reported() {
        let x = gaussian(100, &ar1_covariance(80, 0.25).unwrap(), 16);
        let ens = recursive_knockoff(&x, 3, 2, ShrinkagePolicy::Auto).unwrap();
        let diag = exchangeability_check(&ens, &ReferenceCovariance::Estimate).unwrap();
        assert_eq!(diag.per_set_results.len(), 7);
        assert!(diag.max_abs_dev_cov_knockoff >= 0.0);
        assert!(diag.max_abs_dev_cross >= 0.0);
    }
}
