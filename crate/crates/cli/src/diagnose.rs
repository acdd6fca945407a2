use anyhow::Result;
use knoop_core::{
    ar1_covariance, exchangeability_check, load_csv, recursive_knockoff, sample_mvn, ReferenceCovariance,
};
use nalgebra::DVector;

use crate::{output, DiagnoseArgs};

pub fn run(a: DiagnoseArgs) -> Result<()> {
    let (x, reference) = match (&a.input, a.n, a.p) {
        (Some(path), _, _) => (load_csv(path, &a.target)?.x, ReferenceCovariance::Estimate),
        (None, Some(n), Some(p)) => {
            let sigma = ar1_covariance(p, a.rho)?;
            let x = sample_mvn(n, &DVector::zeros(p), &sigma, a.data_seed)?;
            (x, ReferenceCovariance::Known(sigma))
        }
        _ => unreachable!("clap requires --in or --n/--p"),
    };
    let ensemble = recursive_knockoff(&x, a.ell_max, a.seed, a.model.shrinkage)?;
    let diag = exchangeability_check(&ensemble, &reference)?;

    output::write_text(&a.out, "diagnostics.json", &(serde_json::to_string_pretty(&diag)? + "\n"))?;
    if let Some(path) = &a.export_ensemble {
        ensemble.export_csv(path)?;
    }

    println!(
        "{:>4} {:>6} {:>7} {:>10}  {:>12} {:>12} {:>12}",
        "set", "layer", "parent", "s", "cov(ko)", "cross", "cross(jj)"
    );
    for s in &diag.per_set_results {
        println!(
            "{:>4} {:>6} {:>7} {:>10.4}  {:>12.4e} {:>12.4e} {:>12.4e}",
            s.set, s.layer, s.parent, s.s_effective, s.dev_cov_knockoff, s.dev_cross_offdiag, s.dev_cross_diag
        );
    }
    println!(
        "max deviations: cov(ko) {:.4e}, cross {:.4e}, between sets {:.4e}",
        diag.max_abs_dev_cov_knockoff, diag.max_abs_dev_cross, diag.max_abs_dev_between_sets
    );
    Ok(())
}
