use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Creates `dir` if needed and returns `dir/name`.
pub fn target(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = target(dir, name)?;
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn fmt_sd(sd: Option<f64>) -> String {
    sd.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}
