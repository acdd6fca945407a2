//! Variable selection with over-parameterized knockoffs.
//!
//! The pipeline generates a recursive ensemble of Gaussian knockoff copies
//! of the design, fits a minimum-norm interpolating regression on the
//! original and knockoff columns together, and scores each original variable
//! by how far its coefficient sits from the spread of its own knockoffs'
//! coefficients.
//!
//! ```no_run
//! use knoop_core::{knoop_pipeline, select_bh, synthesize, PipelineConfig, SimulationConfig};
//!
//! let data = synthesize(&SimulationConfig { n: 100, p: 80, p_real: 10, rho: 0.25, sigma2: 1.0, seed: 1 })?;
//! let out = knoop_pipeline(&data, &PipelineConfig::default())?;
//! let selected = select_bh(&out.report, 0.1)?;
//! println!("{:?}", selected.selected);
//! # Ok::<(), knoop_core::KnoopError>(())
//! ```

pub mod benchmark;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod knockoff;
pub mod pipeline;
pub mod regression;
pub mod rng;
pub mod selection;

pub use benchmark::{preset_settings, run_benchmark, BenchmarkReport, BenchmarkSetting, MethodSummary, SettingReport};
pub use dataset::{
    ar1_covariance, load_csv, load_dataset, normalize_columns, sample_mvn, save_dataset, synthesize, DataMatrix,
    Dataset, GroundTruth, ResponseVector, SimulationConfig,
};
pub use error::{KnoopError, Result};
pub use evaluation::{auc_from_scores, empirical_fdr_power, mse, MetricSet};
pub use inference::{
    knockoff_stats, normal_cdf, p_values, z_statistics, KnockoffMoments, SignificanceReport, VariableSignificance,
    ZScale,
};
pub use knockoff::{
    compute_knockoff, exchangeability_check, fit_gaussian, recursive_knockoff, GaussianModel, KnockoffDiagnostics,
    KnockoffEnsemble, ReferenceCovariance, ShrinkagePolicy,
};
pub use pipeline::{knoop_pipeline, KnoopOutput, PipelineConfig};
pub use regression::{predict, ridge_fit, ridgeless_fit, RidgelessFit, SolverConfig};
pub use selection::{default_cv_candidates, select_bh, select_cv, select_top_k, SelectionMethod, SelectionResult};
