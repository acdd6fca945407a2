use std::fs;

use anyhow::{bail, Context, Result};
use knoop_core::{preset_settings, run_benchmark, BenchmarkSetting};

use crate::output::{self, fmt_sd};
use crate::BenchmarkArgs;

pub const PRESET_NAME: &str = "paper-settings";

fn load_settings(a: &BenchmarkArgs) -> Result<Vec<BenchmarkSetting>> {
    if let Some(name) = &a.preset {
        if name != PRESET_NAME {
            bail!("unknown preset {name:?}; available: {PRESET_NAME}");
        }
        return Ok(preset_settings(20));
    }
    let path = a.settings.as_ref().expect("clap requires a source");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid settings file {}", path.display()))
}

/// Keeps the settings named in `only`, each given as a label or a 1-based position.
fn filter(settings: Vec<BenchmarkSetting>, only: &[String]) -> Result<Vec<BenchmarkSetting>> {
    let mut keep = vec![false; settings.len()];
    for key in only {
        let key = key.trim();
        let hit = settings
            .iter()
            .position(|s| s.label == key)
            .or_else(|| key.parse::<usize>().ok().filter(|&i| (1..=settings.len()).contains(&i)).map(|i| i - 1));
        match hit {
            Some(i) => keep[i] = true,
            None => bail!("no setting matches {key:?}"),
        }
    }
    Ok(settings.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect())
}

pub fn run(a: BenchmarkArgs) -> Result<()> {
    let mut settings = load_settings(&a)?;
    if let Some(only) = &a.only {
        settings = filter(settings, only)?;
    }
    if settings.is_empty() {
        bail!("no settings to run");
    }
    if let Some(reps) = a.reps {
        for s in &mut settings {
            s.repetitions = reps;
        }
    }
    for s in &settings {
        s.validate()?;
    }

    let report = run_benchmark(&settings, a.seed, a.parallelism)?;
    let saved = if a.timings { report.clone() } else { report.without_timings() };
    output::write_text(&a.out, "benchmark.json", &saved.to_json()?)?;
    saved.write_csv(output::target(&a.out, "benchmark.csv")?)?;

    println!(
        "{:<12} {:>5} {:>5} {:>6} {:>5}  {:>15}  {:>15}  {:>9}",
        "setting", "n", "p", "p_real", "reps", "knoop auc", "ridge auc", "seconds"
    );
    for s in &report.settings {
        let ridge = s
            .ridge
            .as_ref()
            .map_or_else(|| "-".to_string(), |r| format!("{:.3} ± {}", r.mean, fmt_sd(r.sd)));
        let secs: f64 = s.seconds.as_ref().map_or(0.0, |t| t.iter().sum());
        println!(
            "{:<12} {:>5} {:>5} {:>6} {:>5}  {:>15}  {:>15}  {:>9.1}",
            s.label,
            s.sim.n,
            s.sim.p,
            s.sim.p_real,
            s.repetitions,
            format!("{:.3} ± {}", s.knoop.mean, fmt_sd(s.knoop.sd)),
            ridge,
            secs
        );
    }
    Ok(())
}
