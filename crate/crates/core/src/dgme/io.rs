//! Feature CSV and statistics JSON files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calibrate::zscore_values;
use super::{DgmeDescriptor, NormStats};
use crate::error::{Error, Result};
use crate::meta::{format_sig, Meta};
use crate::table::{write_file, CsvTable};

/// Significant digits used for every float written to a feature table.
pub const FEATURE_DIGITS: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub clip_id: String,
    pub label: String,
    pub values: Vec<f64>,
}

/// `clip_id,label,{prefix}0..{prefix}{D-1}` table of fixed-length vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub meta: Meta,
    pub prefix: String,
    pub dim: usize,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(meta: Meta, prefix: &str, dim: usize) -> Self {
        Self { meta, prefix: prefix.to_string(), dim, rows: Vec::new() }
    }

    pub fn push(&mut self, clip_id: &str, label: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: values.len(), context: "feature row" });
        }
        self.rows.push(FeatureRow { clip_id: clip_id.to_string(), label: label.to_string(), values });
        Ok(())
    }

    pub fn config_hash(&self) -> &str {
        self.meta.get("config_hash").unwrap_or("")
    }

    pub fn descriptors(&self) -> Vec<DgmeDescriptor> {
        self.rows
            .iter()
            .map(|r| DgmeDescriptor {
                clip_id: r.clip_id.clone(),
                config_hash: self.config_hash().to_string(),
                values: r.values.clone(),
            })
            .collect()
    }

    pub fn row(&self, clip_id: &str) -> Option<&FeatureRow> {
        self.rows.iter().find(|r| r.clip_id == clip_id)
    }

    /// Raw descriptors are printed with `FEATURE_DIGITS` significant digits;
    /// calibrated values are printed exactly so they survive a round trip.
    pub fn render(&self) -> String {
        let calibrated = self.meta.get("calibrated").is_some();
        let mut header = vec!["clip_id".to_string(), "label".to_string()];
        header.extend((0..self.dim).map(|i| format!("{}{i}", self.prefix)));
        let mut table = CsvTable::new(self.meta.clone(), header);
        for r in &self.rows {
            let mut fields = vec![r.clip_id.clone(), r.label.clone()];
            if calibrated {
                fields.extend(r.values.iter().map(|&v| format!("{v:?}")));
            } else {
                fields.extend(r.values.iter().map(|&v| format_sig(v, FEATURE_DIGITS)));
            }
            table.rows.push(fields);
        }
        table.render()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.render())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let table = CsvTable::parse(text, path)?;
        let h = &table.header;
        if h.len() < 3 || h[0] != "clip_id" || h[1] != "label" {
            return Err(Error::format(path, "feature header", "expected clip_id,label,<prefix>0,..."));
        }
        let prefix = h[2].trim_end_matches(|c: char| c.is_ascii_digit()).to_string();
        for (i, name) in h[2..].iter().enumerate() {
            if *name != format!("{prefix}{i}") {
                return Err(Error::format(path, "feature header", format!("column {} is {name:?}", i + 2)));
            }
        }
        let dim = h.len() - 2;
        let mut rows = Vec::with_capacity(table.rows.len());
        for (n, r) in table.rows.iter().enumerate() {
            let values = r[2..]
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::format(path, "feature value", format!("row {}: {f:?}", n + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow { clip_id: r[0].clone(), label: r[1].clone(), values });
        }
        Ok(Self { meta: table.meta, prefix, dim, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Z-scores every row. The features and statistics must share a config
    /// hash; the result records the statistics' provenance.
    pub fn normalized(&self, stats: &NormStats) -> Result<Self> {
        if self.config_hash() != stats.config_hash {
            return Err(Error::ConfigMismatch(self.config_hash().to_string(), stats.config_hash.clone()));
        }
        let mut out = self.clone();
        out.meta.set("calibrated", "zscore");
        for r in &mut out.rows {
            r.values = zscore_values(&r.values, stats)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub meta: Meta,
    #[serde(flatten)]
    pub stats: NormStats,
}

impl StatsFile {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_file(path.as_ref(), text)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, "stats json", e.to_string()))?;
        if file.stats.mean.len() != file.stats.std.len() {
            return Err(Error::format(path, "stats json", "mean and std lengths differ"));
        }
        Ok(file)
    }
}
