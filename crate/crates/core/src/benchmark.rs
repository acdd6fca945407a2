//! Monte Carlo benchmark over simulation settings.
//!
//! Repetition `r` of a setting labelled `L` under master seed `m` uses the
//! stream root `derive_seed(m, [label_hash(L), r])`, from which the simulator
//! (path `[0]`), the knockoff pipeline (`[1]`) and the ridge baseline folds
//! (`[2]`) each derive their own seed. Results therefore do not depend on
//! which other settings run, in what order, or on how many threads.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, synthesize, Dataset, SimulationConfig};
use crate::error::{KnoopError, Result};
use crate::evaluation::{auc_from_scores, mse};
use crate::pipeline::{knoop_pipeline, PipelineConfig};
use crate::regression::{predict, ridge_fit};
use crate::rng::{derive_seed, label_hash};
use crate::selection::{cross_validated_mse, fold_assignment};

/// Ridge penalties searched by the baseline, log-spaced over 1e-4..1e2.
pub const RIDGE_LAMBDA_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
pub const RIDGE_CV_FOLDS: usize = 5;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSetting {
    pub label: String,
    pub sim: SimulationConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    pub repetitions: usize,
    /// Also score a cross-validated ridge fit on the raw design.
    #[serde(default = "default_true")]
    pub baseline: bool,
}

impl BenchmarkSetting {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(KnoopError::invalid(format!("{}: repetitions must be at least 1", self.label)));
        }
        self.sim.validate()?;
        if self.sim.p_real == 0 || self.sim.p_real == self.sim.p {
            return Err(KnoopError::invalid(format!(
                "{}: AUC needs 0 < p_real < p",
                self.label
            )));
        }
        self.pipeline.validate()
    }
}

/// The thirteen simulation settings of the reference experiments: settings
/// 1–10 use `ρ = 0.25, σ² = 1`; 11–13 are the `p = 1000` high-dimensional
/// settings with `ρ = 0.1, σ² = 0.25`. All use three knockoff layers.
pub fn preset_settings(repetitions: usize) -> Vec<BenchmarkSetting> {
    const SHAPES: [(usize, usize, usize); 13] = [
        (100, 80, 10),
        (100, 100, 10),
        (100, 150, 10),
        (100, 180, 10),
        (100, 100, 20),
        (100, 100, 30),
        (100, 100, 40),
        (100, 100, 50),
        (85, 100, 10),
        (120, 100, 10),
        (3000, 1000, 30),
        (100, 1000, 30),
        (1000, 1000, 30),
    ];
    SHAPES
        .iter()
        .enumerate()
        .map(|(i, &(n, p, p_real))| {
            let high_dim = i >= 10;
            BenchmarkSetting {
                label: format!("setting-{}", i + 1),
                sim: SimulationConfig {
                    n,
                    p,
                    p_real,
                    rho: if high_dim { 0.1 } else { 0.25 },
                    sigma2: if high_dim { 0.25 } else { 1.0 },
                    seed: 0,
                },
                pipeline: PipelineConfig::default(),
                repetitions,
                baseline: true,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub aucs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; absent for a single repetition.
    pub sd: Option<f64>,
}

impl MethodSummary {
    pub fn from_aucs(aucs: Vec<f64>) -> Self {
        let (mean, sd) = mean_sd(&aucs);
        MethodSummary { aucs, mean, sd }
    }
}

/// Mean and sample standard deviation (`None` below two values).
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let sd = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (k - 1.0)).sqrt()
    });
    (mean, sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub label: String,
    pub sim: SimulationConfig,
    pub ell_max: usize,
    pub repetitions: usize,
    pub knoop: MethodSummary,
    pub ridge: Option<MethodSummary>,
    /// Wall-clock seconds per repetition; omitted from reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub master_seed: u64,
    pub settings: Vec<SettingReport>,
}

impl BenchmarkReport {
    /// Copy with the timing columns dropped, so that repeated runs serialize
    /// to identical bytes.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.settings {
            s.seconds = None;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Flat CSV with columns `setting, repetition, method, auc, seconds`
    /// (repetitions numbered from 1; `seconds` empty when timings are absent).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows = Vec::new();
        for s in &self.settings {
            for r in 0..s.repetitions {
                let secs = s
                    .seconds
                    .as_ref()
                    .map(|t| format!("{:?}", t[r]))
                    .unwrap_or_default();
                rows.push(vec![
                    s.label.clone(),
                    (r + 1).to_string(),
                    "knoop".to_string(),
                    format!("{:?}", s.knoop.aucs[r]),
                    secs.clone(),
                ]);
                if let Some(ridge) = &s.ridge {
                    rows.push(vec![
                        s.label.clone(),
                        (r + 1).to_string(),
                        "ridge".to_string(),
                        format!("{:?}", ridge.aucs[r]),
                        secs,
                    ]);
                }
            }
        }
        dataset::write_csv(
            path.as_ref(),
            &["setting", "repetition", "method", "auc", "seconds"],
            &rows,
        )
    }
}

struct RepetitionResult {
    knoop_auc: f64,
    ridge_auc: Option<f64>,
    seconds: f64,
}

/// Ridge on the raw design with the penalty picked from
/// [`RIDGE_LAMBDA_GRID`] by [`RIDGE_CV_FOLDS`]-fold CV; returns `|β̂|` and
/// the chosen penalty.
pub fn ridge_baseline_scores(data: &Dataset, seed: u64) -> Result<(Vec<f64>, f64)> {
    let n = data.n();
    let folds = fold_assignment(n, RIDGE_CV_FOLDS, seed)?;
    let mut best = (f64::INFINITY, RIDGE_LAMBDA_GRID[0]);
    for &lambda in &RIDGE_LAMBDA_GRID {
        let score = cross_validated_mse(&folds, n, |train, test| {
            let beta = ridge_fit(&data.x.select_rows(train), &data.y.select_rows(train), lambda)?;
            let y_hat = predict(&data.x.select_rows(test), &beta)?;
            mse(&data.y.select_rows(test), &y_hat)
        })?;
        if score < best.0 {
            best = (score, lambda);
        }
    }
    let beta = ridge_fit(&data.x, &data.y, best.1)?;
    Ok((beta.iter().map(|b| b.abs()).collect(), best.1))
}

fn run_repetition(setting: &BenchmarkSetting, master_seed: u64, rep: usize) -> Result<RepetitionResult> {
    let start = Instant::now();
    let root = derive_seed(master_seed, &[label_hash(&setting.label), rep as u64]);
    let sim = SimulationConfig {
        seed: derive_seed(root, &[0]),
        ..setting.sim
    };
    let data = synthesize(&sim)?;
    let truth = data.truth.as_ref().expect("simulated data carries truth");
    let cfg = PipelineConfig {
        seed: derive_seed(root, &[1]),
        ..setting.pipeline
    };
    let out = knoop_pipeline(&data, &cfg)?;
    let knoop_auc = auc_from_scores(&out.report.scores(), &truth.support)?;
    drop(out);
    let ridge_auc = if setting.baseline {
        let (scores, _) = ridge_baseline_scores(&data, derive_seed(root, &[2])).map_err(|e| e.in_stage("ridge baseline"))?;
        Some(auc_from_scores(&scores, &truth.support)?)
    } else {
        None
    };
    Ok(RepetitionResult {
        knoop_auc,
        ridge_auc,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every repetition of every setting on a pool of `parallelism`
/// threads (0 = rayon's default) and aggregates in a fixed order.
pub fn run_benchmark(settings: &[BenchmarkSetting], master_seed: u64, parallelism: usize) -> Result<BenchmarkReport> {
    for s in settings {
        s.validate()?;
    }
    let tasks: Vec<(usize, usize)> = settings
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.repetitions).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| KnoopError::invalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<RepetitionResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, r)| {
                run_repetition(&settings[i], master_seed, r)
                    .map_err(|e| e.in_stage(format!("{} repetition {}", settings[i].label, r + 1)))
            })
            .collect()
    });

    let mut results = results.into_iter();
    let mut reports = Vec::with_capacity(settings.len());
    for s in settings {
        let reps: Vec<RepetitionResult> = results.by_ref().take(s.repetitions).collect::<Result<_>>()?;
        let knoop = MethodSummary::from_aucs(reps.iter().map(|r| r.knoop_auc).collect());
        let ridge = s
            .baseline
            .then(|| MethodSummary::from_aucs(reps.iter().filter_map(|r| r.ridge_auc).collect()));
        reports.push(SettingReport {
            label: s.label.clone(),
            sim: s.sim,
            ell_max: s.pipeline.ell_max,
            repetitions: s.repetitions,
            knoop,
            ridge,
            seconds: Some(reps.iter().map(|r| r.seconds).collect()),
        });
    }
    Ok(BenchmarkReport {
        master_seed,
        settings: reports,
    })
}
