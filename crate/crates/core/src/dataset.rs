//! Data containers, the AR(1) Gaussian simulator and CSV persistence.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KnoopError, Result};
use crate::rng::{rng_from_seed, KnoopRng};

/// Tolerance on column norms for a matrix flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// An `n × d` matrix of finite reals stored column-major, with one unique
/// label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
    normalized: bool,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(KnoopError::invalid(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if labels.len() != values.ncols() {
            return Err(KnoopError::dims(format!(
                "{} labels for {} columns",
                labels.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(KnoopError::invalid(format!("duplicate column label {label:?}")));
            }
        }
        check_finite(&values)?;
        Ok(DataMatrix {
            values,
            labels,
            normalized: false,
        })
    }

    /// Builds a matrix with labels `x1, ..., xd`.
    pub fn with_default_labels(values: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=values.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(values, labels)
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Copies the given columns, in order, into a new matrix.
    pub fn select_columns(&self, columns: &[usize]) -> Result<DataMatrix> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.ncols()) {
            return Err(KnoopError::invalid(format!(
                "column {bad} out of range for {} columns",
                self.ncols()
            )));
        }
        let values = self.values.select_columns(columns);
        let labels = columns.iter().map(|&c| self.labels[c].clone()).collect();
        DataMatrix::new(values, labels)
    }

    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        DataMatrix {
            values: self.values.select_rows(rows),
            labels: self.labels.clone(),
            normalized: false,
        }
    }
}

fn check_finite(values: &DMatrix<f64>) -> Result<()> {
    for (j, col) in values.column_iter().enumerate() {
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(KnoopError::NonFinite { row: i, column: j });
        }
    }
    Ok(())
}

/// Response values paired with the rows of a [`DataMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector(DVector<f64>);

impl ResponseVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(KnoopError::NonFinite { row: i, column: 0 });
        }
        Ok(ResponseVector(values))
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn select_rows(&self, rows: &[usize]) -> ResponseVector {
        ResponseVector(DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.0[r])))
    }
}

/// Parameters of one draw from the AR(1) linear-Gaussian simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    pub p_real: usize,
    pub rho: f64,
    pub sigma2: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(KnoopError::invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if self.p == 0 {
            return Err(KnoopError::invalid("p must be at least 1"));
        }
        if self.p_real > self.p {
            return Err(KnoopError::invalid(format!(
                "p_real ({}) exceeds p ({})",
                self.p_real, self.p
            )));
        }
        check_rho(self.rho)?;
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(KnoopError::invalid(format!(
                "sigma2 must be finite and non-negative, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(KnoopError::invalid(format!("rho must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

/// True coefficients of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta: Vec<f64>,
    /// Zero-based indices of the nonzero coefficients, ascending.
    pub support: Vec<usize>,
}

impl GroundTruth {
    pub fn from_beta(beta: Vec<f64>) -> Self {
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(i, _)| i)
            .collect();
        GroundTruth { beta, support }
    }

    pub fn is_relevant(&self, index: usize) -> bool {
        self.support.binary_search(&index).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DataMatrix,
    pub y: ResponseVector,
    pub truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(x: DataMatrix, y: ResponseVector, truth: Option<GroundTruth>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(KnoopError::dims(format!(
                "design has {} rows but response has {}",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(t) = &truth {
            if t.beta.len() != x.ncols() {
                return Err(KnoopError::dims(format!(
                    "ground truth has {} coefficients for {} columns",
                    t.beta.len(),
                    x.ncols()
                )));
            }
        }
        Ok(Dataset { x, y, truth })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// `Σ[i][j] = rho^|i−j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(KnoopError::invalid("p must be at least 1"));
    }
    check_rho(rho)?;
    Ok(DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32)))
}

const JITTER_STEPS: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Lower Cholesky factor of a PSD matrix, adding `eps·trace/d·I` with `eps`
/// escalating from 1e-12 to 1e-6 when the plain factorization fails. An
/// all-zero matrix factors to zero.
pub(crate) fn psd_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    if cov.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(d, d));
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.l());
    }
    let scale = cov.trace() / d as f64;
    for eps in JITTER_STEPS {
        let mut jittered = cov.clone();
        for i in 0..d {
            jittered[(i, i)] += eps * scale;
        }
        if let Some(ch) = jittered.cholesky() {
            return Ok(ch.l());
        }
    }
    Err(KnoopError::NotPositiveDefinite(format!(
        "Cholesky factorization of {d}x{d} covariance failed after jitter up to 1e-6"
    )))
}

fn check_covariance(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<()> {
    let d = mean.len();
    if d == 0 {
        return Err(KnoopError::invalid("mean must be non-empty"));
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(KnoopError::dims(format!(
            "covariance is {}x{} but mean has length {d}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let scale = cov.amax().max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-10 * scale {
                return Err(KnoopError::invalid(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Row-major `n × d` block of standard normal draws.
pub(crate) fn standard_normal_rows(rng: &mut KnoopRng, n: usize, d: usize) -> DMatrix<f64> {
    let draws: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(n, d, &draws)
}

fn sample_mvn_with(
    rng: &mut KnoopRng,
    n: usize,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_covariance(mean, cov)?;
    let lower = psd_cholesky(cov)?;
    let z = standard_normal_rows(rng, n, mean.len());
    let mut x = z * lower.transpose();
    for mut row in x.row_iter_mut() {
        row += mean.transpose();
    }
    Ok(x)
}

/// Draws `n` i.i.d. rows from `N(mean, cov)`. Draws are consumed row by row.
pub fn sample_mvn(n: usize, mean: &DVector<f64>, cov: &DMatrix<f64>, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(KnoopError::invalid("n must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let x = sample_mvn_with(&mut rng, n, mean, cov)?;
    DataMatrix::with_default_labels(x)
}

/// In-place Fisher–Yates shuffle, swapping position `i` with a uniform
/// position in `0..=i` for `i` from the last index down to 1.
pub fn fisher_yates<T>(rng: &mut KnoopRng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Simulates `y = Xβ + ε` with AR(1)-correlated Gaussian rows.
///
/// A single stream seeded by `config.seed` is consumed in a fixed order:
///
/// 1. `n·p` standard normals for X, row by row (`X = Z·Lᵀ`, `L` the Cholesky factor of Σ);
/// 2. `p_real` draws from the open interval (0, 1) for the nonzero coefficients;
/// 3. a [`fisher_yates`] permutation of the zero-padded coefficient vector;
/// 4. `n` standard normals `z_i`, with `ε_i = sqrt(sigma2)·z_i`.
///
/// Each response is accumulated as `y_i = (Σ_j X_ij·β_j) + ε_i` with `j` ascending.
pub fn synthesize(config: &SimulationConfig) -> Result<Dataset> {
    config.validate()?;
    let SimulationConfig { n, p, p_real, rho, sigma2, seed } = *config;
    let mut rng = rng_from_seed(seed);

    let cov = ar1_covariance(p, rho)?;
    let x = sample_mvn_with(&mut rng, n, &DVector::zeros(p), &cov)?;

    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(p_real) {
        *b = rng.sample(Open01);
    }
    fisher_yates(&mut rng, &mut beta);

    let noise_sd = sigma2.sqrt();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eps = noise_sd * rng.sample::<f64, _>(StandardNormal);
            let mut signal = 0.0;
            for (j, b) in beta.iter().enumerate() {
                signal += x[(i, j)] * b;
            }
            signal + eps
        })
        .collect();

    Dataset::new(
        DataMatrix::with_default_labels(x)?,
        ResponseVector::from_vec(y)?,
        Some(GroundTruth::from_beta(beta)),
    )
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(m: &DataMatrix) -> Result<DataMatrix> {
    let mut values = m.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(KnoopError::ZeroColumn {
                index: j,
                label: m.labels[j].clone(),
            });
        }
        col /= norm;
    }
    Ok(DataMatrix {
        values,
        labels: m.labels.clone(),
        normalized: true,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KnoopError + '_ {
    move |source| KnoopError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> KnoopError {
    KnoopError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a numeric CSV with a header row. `target_column` becomes the
/// response; all other columns, in file order, form the design.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target = headers.iter().position(|h| h == target_column).ok_or_else(|| {
        parse_err(
            path,
            format!(
                "target column {target_column:?} not found; available columns: {}",
                headers.join(", ")
            ),
        )
    })?;

    let width = headers.len();
    let mut features: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| parse_err(path, format!("row {row}: {e}")))?;
        if record.len() != width {
            return Err(parse_err(
                path,
                format!("row {row} has {} fields, expected {width}", record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                parse_err(
                    path,
                    format!("row {row}, column {:?}: {cell:?} is not a finite number", headers[c]),
                )
            })?;
            if c == target {
                y.push(v);
            } else {
                features.push(v);
            }
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(parse_err(path, "no data rows"));
    }
    if width < 2 {
        return Err(parse_err(path, "no feature columns besides the target"));
    }
    let labels: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != target)
        .map(|(_, h)| h.clone())
        .collect();
    let x = DMatrix::from_row_slice(n, width - 1, &features);
    Dataset::new(DataMatrix::new(x, labels)?, ResponseVector::from_vec(y)?, None)
}

/// `data.csv` → `data.truth.json`.
pub fn truth_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.truth.json"))
}

/// Like [`load_csv`], additionally reading the ground-truth sidecar when present.
pub fn load_dataset(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let mut data = load_csv(path, target_column)?;
    let sidecar = truth_path(path);
    if sidecar.exists() {
        let text = fs::read_to_string(&sidecar).map_err(io_err(&sidecar))?;
        let truth: GroundTruth = serde_json::from_str(&text)?;
        data = Dataset::new(data.x, data.y, Some(truth))?;
    }
    Ok(data)
}

pub const RESPONSE_LABEL: &str = "y";

/// Writes the design and response (last column, named `y`) as CSV, plus the
/// ground truth as a sibling `<stem>.truth.json` when present. Values are
/// written in shortest round-trip form.
pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if d.x.labels().iter().any(|l| l == RESPONSE_LABEL) {
        return Err(KnoopError::invalid(format!(
            "a design column is already named {RESPONSE_LABEL:?}"
        )));
    }
    let mut header: Vec<&str> = d.x.labels().iter().map(String::as_str).collect();
    header.push(RESPONSE_LABEL);
    let mut rows = Vec::with_capacity(d.n());
    for i in 0..d.n() {
        let mut row: Vec<String> = d.x.values().row(i).iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{:?}", d.y.values()[i]));
        rows.push(row);
    }
    write_csv(path, &header, &rows)?;

    if let Some(truth) = &d.truth {
        let sidecar = truth_path(path);
        let json = serde_json::to_string_pretty(truth)?;
        fs::write(&sidecar, json + "\n").map_err(io_err(&sidecar))?;
    }
    Ok(())
}

/// Writes a header and rows as LF-terminated CSV.
pub fn write_csv<S: AsRef<[u8]>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let to_io = |e: csv::Error| KnoopError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    writer.write_record(header).map_err(to_io)?;
    for row in rows {
        writer.write_record(row).map_err(to_io)?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}
