//! Per-dimension z-score calibration against a reference corpus.

use serde::{Deserialize, Serialize};

use super::DgmeDescriptor;
use crate::error::{Error, Result};

/// Standard deviations are floored at this value when dividing.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub config_hash: String,
    #[serde(rename = "count")]
    pub source_count: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Sample mean and population standard deviation (divisor N) per dimension.
pub fn fit_stats(descriptors: &[DgmeDescriptor]) -> Result<NormStats> {
    if descriptors.is_empty() {
        return Err(Error::Empty("no descriptors to fit statistics on"));
    }
    if descriptors.len() < 2 {
        return Err(Error::TooFew { what: "descriptors to fit statistics", have: descriptors.len(), need: 2 });
    }
    let first = &descriptors[0];
    let dim = first.values.len();
    for d in &descriptors[1..] {
        if d.config_hash != first.config_hash {
            return Err(Error::ConfigMismatch(first.config_hash.clone(), d.config_hash.clone()));
        }
        if d.values.len() != dim {
            return Err(Error::Dimension { expected: dim, actual: d.values.len(), context: "descriptor length" });
        }
    }
    let n = descriptors.len() as f64;
    // Shifted by the first sample so constant columns come out exact.
    let mut offset = vec![0.0; dim];
    for d in descriptors {
        for ((o, v), s) in offset.iter_mut().zip(&d.values).zip(&first.values) {
            *o += v - s;
        }
    }
    let mean: Vec<f64> = first.values.iter().zip(&offset).map(|(s, o)| s + o / n).collect();
    let mut var = vec![0.0; dim];
    for d in descriptors {
        for ((s, v), m) in var.iter_mut().zip(&d.values).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(NormStats { config_hash: first.config_hash.clone(), source_count: descriptors.len(), mean, std })
}

/// `(x − μ) / max(σ, ε)` per dimension.
pub fn apply_zscore(desc: &DgmeDescriptor, stats: &NormStats) -> Result<Vec<f64>> {
    if desc.config_hash != stats.config_hash {
        return Err(Error::ConfigMismatch(desc.config_hash.clone(), stats.config_hash.clone()));
    }
    zscore_values(&desc.values, stats)
}

pub(crate) fn zscore_values(values: &[f64], stats: &NormStats) -> Result<Vec<f64>> {
    if values.len() != stats.mean.len() {
        return Err(Error::Dimension {
            expected: stats.mean.len(),
            actual: values.len(),
            context: "descriptor vs statistics length",
        });
    }
    Ok(values.iter().zip(stats.mean.iter().zip(&stats.std)).map(|(x, (m, s))| (x - m) / s.max(STD_FLOOR)).collect())
}
