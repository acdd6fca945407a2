//! Anomaly-based significance test on ridgeless coefficients.
//!
//! Each original coefficient is compared against the empirical distribution
//! of the coefficients of its own `k_max` knockoff copies.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{KnoopError, Result};

/// Magnitude given to a Z-statistic whose knockoff spread is exactly zero.
pub const Z_CLAMP: f64 = 38.0;

/// Which published scaling of the Z-statistic to use. Both give the same
/// ranking; they differ by the factor `√(k_max − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZScale {
    /// `(β̂ᵢ − β̄ᵢ) / Sᵢ`
    #[default]
    Alg3,
    /// `√(k_max − 1)·(β̂ᵢ − β̄ᵢ) / Sᵢ`
    Definition,
}

impl std::str::FromStr for ZScale {
    type Err = KnoopError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg3" => Ok(ZScale::Alg3),
            "definition" => Ok(ZScale::Definition),
            _ => Err(KnoopError::invalid(format!("z scale must be 'alg3' or 'definition', got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnockoffMoments {
    pub mean: f64,
    pub sd: f64,
}

/// Sample mean and standard deviation (`k_max − 1` denominator) of the
/// knockoff coefficients of every original variable. `coefficients` is laid
/// out as `[β̂_1..β̂_p, β̂_{1,1}..β̂_{1,p}, ..., β̂_{kmax,1}..β̂_{kmax,p}]`.
pub fn knockoff_stats(coefficients: &[f64], p: usize, k_max: usize) -> Result<Vec<KnockoffMoments>> {
    if k_max < 2 {
        return Err(KnoopError::invalid(format!(
            "at least two knockoff sets are needed for a standard deviation, got {k_max}"
        )));
    }
    if coefficients.len() != (k_max + 1) * p {
        return Err(KnoopError::dims(format!(
            "{} coefficients for p = {p} and k_max = {k_max}",
            coefficients.len()
        )));
    }
    let k = k_max as f64;
    Ok((0..p)
        .map(|i| {
            let copies = (1..=k_max).map(|set| coefficients[set * p + i]);
            let mean = copies.clone().sum::<f64>() / k;
            let ss: f64 = copies.map(|c| (c - mean) * (c - mean)).sum();
            KnockoffMoments {
                mean,
                sd: (ss / (k - 1.0)).sqrt(),
            }
        })
        .collect())
}

/// `(β̂ᵢ − β̄ᵢ)/Sᵢ`, times `√(k_max − 1)` under [`ZScale::Definition`].
///
/// When `Sᵢ = 0`: zero if `β̂ᵢ = β̄ᵢ`, otherwise `±`[`Z_CLAMP`].
pub fn z_statistics(beta_hat: &[f64], stats: &[KnockoffMoments], scale: ZScale, k_max: usize) -> Result<Vec<f64>> {
    if beta_hat.len() != stats.len() {
        return Err(KnoopError::dims(format!(
            "{} coefficients but {} knockoff summaries",
            beta_hat.len(),
            stats.len()
        )));
    }
    let factor = match scale {
        ZScale::Alg3 => 1.0,
        ZScale::Definition => ((k_max as f64) - 1.0).max(0.0).sqrt(),
    };
    Ok(beta_hat
        .iter()
        .zip(stats)
        .map(|(&b, m)| {
            let diff = b - m.mean;
            if diff == 0.0 {
                0.0
            } else if m.sd == 0.0 {
                Z_CLAMP.copysign(diff)
            } else {
                (factor * diff / m.sd).clamp(-Z_CLAMP, Z_CLAMP)
            }
        })
        .collect())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided p-values `2Φ(−|z|)`.
pub fn p_values(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| two_sided_p(v)).collect()
}

fn two_sided_p(z: f64) -> f64 {
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSignificance {
    /// Zero-based column index in the original design.
    pub index: usize,
    pub label: String,
    pub beta_hat: f64,
    pub knockoff_mean: f64,
    pub knockoff_sd: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Test results for every original variable, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub entries: Vec<VariableSignificance>,
    pub k_max: usize,
    pub ell_max: usize,
    pub z_scale: ZScale,
}

impl SignificanceReport {
    /// Assembles a report from coefficients laid out as in [`knockoff_stats`].
    pub fn from_coefficients(
        coefficients: &[f64],
        labels: &[String],
        ell_max: usize,
        scale: ZScale,
    ) -> Result<Self> {
        let p = labels.len();
        let k_max = (1usize << ell_max) - 1;
        let stats = knockoff_stats(coefficients, p, k_max)?;
        let beta_hat = &coefficients[..p];
        let z = z_statistics(beta_hat, &stats, scale, k_max)?;
        let pv = p_values(&z);
        let entries = (0..p)
            .map(|i| VariableSignificance {
                index: i,
                label: labels[i].clone(),
                beta_hat: beta_hat[i],
                knockoff_mean: stats[i].mean,
                knockoff_sd: stats[i].sd,
                z: z[i],
                p_value: pv[i],
            })
            .collect();
        Ok(SignificanceReport {
            entries,
            k_max,
            ell_max,
            z_scale: scale,
        })
    }

    pub fn p(&self) -> usize {
        self.entries.len()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p_value).collect()
    }

    /// `|z|` per variable; larger means more important.
    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.z.abs()).collect()
    }

    /// Variable indices by ascending p-value; ties go to the larger `|z|`,
    /// then to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.p()).collect();
        order.sort_by(|&a, &b| {
            let (ea, eb) = (&self.entries[a], &self.entries[b]);
            ea.p_value
                .total_cmp(&eb.p_value)
                .then(eb.z.abs().total_cmp(&ea.z.abs()))
                .then(a.cmp(&b))
        });
        order
    }

    /// Entries in [`ranking`](Self::ranking) order.
    pub fn sorted_entries(&self) -> Vec<&VariableSignificance> {
        self.ranking().into_iter().map(|i| &self.entries[i]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.sorted_entries())? + "\n")
    }
}
