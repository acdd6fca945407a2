//! The end-to-end Knoop procedure: knockoff ensemble → column normalization
//! → ridgeless fit → knockoff moments → Z-statistics → p-values.

use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_columns, Dataset};
use crate::error::{KnoopError, Result};
use crate::inference::{SignificanceReport, ZScale};
use crate::knockoff::{recursive_knockoff, KnockoffEnsemble, ShrinkagePolicy};
use crate::regression::{ridgeless_fit, RidgelessFit, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub ell_max: usize,
    pub solver: SolverConfig,
    pub z_scale: ZScale,
    pub seed: u64,
    /// Defaults to Ledoit–Wolf: the minimal `auto` weight leaves knockoffs
    /// nearly collinear with their inputs once columns outnumber rows.
    pub shrinkage: ShrinkagePolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ell_max: 3,
            solver: SolverConfig::default(),
            z_scale: ZScale::Alg3,
            seed: 0,
            shrinkage: ShrinkagePolicy::LedoitWolf,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ell_max < 2 {
            return Err(KnoopError::invalid(format!(
                "ell_max must be at least 2 so that the knockoff spread is defined, got {}",
                self.ell_max
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct KnoopOutput {
    pub report: SignificanceReport,
    pub ensemble: KnockoffEnsemble,
    pub fit: RidgelessFit,
}

pub fn knoop_pipeline(data: &Dataset, cfg: &PipelineConfig) -> Result<KnoopOutput> {
    cfg.validate()?;
    let ensemble = recursive_knockoff(&data.x, cfg.ell_max, cfg.seed, cfg.shrinkage)
        .map_err(|e| e.in_stage("knockoff generation"))?;
    let design = normalize_columns(ensemble.matrix()).map_err(|e| e.in_stage("normalization"))?;
    let fit = ridgeless_fit(&design, &data.y, &cfg.solver).map_err(|e| e.in_stage("ridgeless regression"))?;
    drop(design);
    let report = SignificanceReport::from_coefficients(
        fit.coefficients.as_slice(),
        data.x.labels(),
        cfg.ell_max,
        cfg.z_scale,
    )
    .map_err(|e| e.in_stage("significance test"))?;
    Ok(KnoopOutput { report, ensemble, fit })
}
