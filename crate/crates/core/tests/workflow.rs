use knoop_core::dataset::{fisher_yates, truth_path};
use knoop_core::rng::rng_from_seed;
use knoop_core::{
    ar1_covariance, exchangeability_check, knoop_pipeline, load_dataset, recursive_knockoff, ridgeless_fit,
    sample_mvn, save_dataset, synthesize, PipelineConfig, ReferenceCovariance, ShrinkagePolicy, SimulationConfig,
    SolverConfig,
};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Open01, StandardNormal};

fn config(seed: u64) -> SimulationConfig {
    SimulationConfig {
        n: 30,
        p: 12,
        p_real: 4,
        rho: 0.25,
        sigma2: 1.0,
        seed,
    }
}

#[test]
fn synthesize_replays_from_its_stream() {
    let cfg = config(11);
    let data = synthesize(&cfg).unwrap();
    let truth = data.truth.as_ref().unwrap();
    let mut rng = rng_from_seed(cfg.seed);
    for _ in 0..cfg.n * cfg.p {
        let _: f64 = rng.sample(StandardNormal);
    }
    let mut beta = vec![0.0; cfg.p];
    for b in beta.iter_mut().take(cfg.p_real) {
        *b = rng.sample(Open01);
    }
    fisher_yates(&mut rng, &mut beta);
    assert_eq!(beta, truth.beta);
    let x = data.x.values();
    for i in 0..cfg.n {
        let z: f64 = rng.sample(StandardNormal);
        let mut signal = 0.0;
        for (j, b) in beta.iter().enumerate() {
            signal += x[(i, j)] * b;
        }
        assert_eq!((signal + cfg.sigma2.sqrt() * z).to_bits(), data.y.as_slice()[i].to_bits());
    }
}

#[test]
fn support_has_requested_size() {
    for seed in 0..20 {
        let data = synthesize(&config(seed)).unwrap();
        let truth = data.truth.unwrap();
        assert_eq!(truth.support.len(), 4);
        assert!(truth.beta.iter().all(|&b| b == 0.0 || (0.0 < b && b < 1.0)));
    }
}

#[test]
fn dataset_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let data = synthesize(&config(5)).unwrap();
    save_dataset(&data, &path).unwrap();
    assert!(truth_path(&path).exists());
    let back = load_dataset(&path, "y").unwrap();
    assert_eq!(back.x.labels(), data.x.labels());
    assert_eq!(back.x.values(), data.x.values());
    assert_eq!(back.y, data.y);
    assert_eq!(back.truth, data.truth);
}

#[test]
fn ar1_ensemble_moments() {
    let sigma = ar1_covariance(5, 0.25).unwrap();
    let x = sample_mvn(50_000, &DVector::zeros(5), &sigma, 3).unwrap();
    let ens = recursive_knockoff(&x, 2, 8, ShrinkagePolicy::Auto).unwrap();
    let diag = exchangeability_check(&ens, &ReferenceCovariance::Known(sigma)).unwrap();
    assert_eq!(diag.per_set_results.len(), 3);
    assert!(diag.max_abs_dev_cov_knockoff < 0.05, "{diag:?}");
    assert!(diag.max_abs_dev_cross < 0.05, "{diag:?}");
    assert!(diag.max_abs_dev_between_sets < 0.05, "{diag:?}");
}

#[test]
fn pipeline_design_interpolates_in_high_dimension() {
    let data = synthesize(&SimulationConfig {
        n: 40,
        p: 30,
        p_real: 5,
        rho: 0.1,
        sigma2: 0.25,
        seed: 2,
    })
    .unwrap();
    let out = knoop_pipeline(&data, &PipelineConfig::default()).unwrap();
    assert_eq!(out.ensemble.matrix().ncols(), 240);
    assert!(out.fit.residual_norm <= 1e-8 * data.y.values().norm());
    let design = knoop_core::normalize_columns(out.ensemble.matrix()).unwrap();
    let refit = ridgeless_fit(&design, &data.y, &SolverConfig::default()).unwrap();
    assert_eq!(refit.coefficients, out.fit.coefficients);
}
