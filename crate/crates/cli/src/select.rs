use anyhow::{bail, Result};
use knoop_core::rng::derive_seed;
use knoop_core::{
    default_cv_candidates, knoop_pipeline, load_csv, select_bh, select_cv, select_top_k, PipelineConfig,
    SelectionResult, SolverConfig,
};

use crate::{output, SelectArgs};

pub fn run(a: SelectArgs) -> Result<()> {
    let cfg = PipelineConfig {
        ell_max: a.ell_max,
        solver: SolverConfig {
            lambda: a.lambda,
            ..SolverConfig::default()
        },
        z_scale: a.z_scale,
        seed: a.seed,
        shrinkage: a.model.shrinkage,
    };
    cfg.validate()?;
    let data = load_csv(&a.input, &a.target)?;
    let out = knoop_pipeline(&data, &cfg)?;
    let report = out.report;

    let selection: SelectionResult = if let Some(k) = a.top_k {
        select_top_k(&report, k)?
    } else if let Some(alpha) = a.bh_alpha {
        select_bh(&report, alpha)?
    } else if a.cv {
        let sizes = a.cv_sizes.unwrap_or_else(|| default_cv_candidates(report.p()));
        select_cv(&data, &report, a.folds, &sizes, derive_seed(a.seed, &[0]))?
    } else {
        bail!("one of --top-k, --bh-alpha or --cv is required");
    };

    output::write_text(&a.out, "report.json", &report.to_json()?)?;
    output::write_text(&a.out, "selection.json", &selection.to_json()?)?;

    println!("{:>4}  {:<16} {:>12} {:>10} {:>12}", "rank", "variable", "beta_hat", "z", "p_value");
    for (rank, e) in report.sorted_entries().into_iter().take(10).enumerate() {
        println!(
            "{:>4}  {:<16} {:>12.4e} {:>10.3} {:>12.4e}",
            rank + 1,
            e.label,
            e.beta_hat,
            e.z,
            e.p_value
        );
    }
    println!("selected {} of {} variables", selection.selected.len(), report.p());
    Ok(())
}
