use anyhow::Result;
use clap::error::ErrorKind;
use clap::CommandFactory;
use knoop_core::{save_dataset, synthesize, SimulationConfig};

use crate::{output, Cli, SimulateArgs};

pub fn run(a: SimulateArgs) -> Result<()> {
    let cfg = SimulationConfig {
        n: a.n,
        p: a.p,
        p_real: a.p_real,
        rho: a.rho,
        sigma2: a.sigma2,
        seed: a.seed,
    };
    if let Err(e) = cfg.validate() {
        let mut cmd = Cli::command();
        let sub = cmd.find_subcommand_mut("simulate").expect("simulate is registered");
        let mut sub = sub.clone().bin_name("knoop simulate");
        sub.error(ErrorKind::ValueValidation, e).exit();
    }
    let data = synthesize(&cfg)?;
    let path = output::target(&a.out, "data.csv")?;
    save_dataset(&data, &path)?;
    println!(
        "simulated n={} p={} p_real={} seed={} -> {}",
        cfg.n,
        cfg.p,
        cfg.p_real,
        cfg.seed,
        path.display()
    );
    Ok(())
}
