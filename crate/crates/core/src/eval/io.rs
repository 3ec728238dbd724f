//! Metrics JSON and confusion matrix CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};
use crate::meta::Meta;
use crate::table::{write_file, CsvTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub meta: Meta,
    #[serde(flatten)]
    pub report: MetricsReport,
}

impl MetricsFile {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_file(path.as_ref(), text)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, "metrics json", e.to_string()))
    }
}

/// Header row and first column carry class names; rows are true classes.
pub fn confusion_table(cm: &ConfusionMatrix, meta: Meta) -> CsvTable {
    let mut header = vec!["true/predicted".to_string()];
    header.extend(cm.class_names.iter().cloned());
    let mut table = CsvTable::new(meta, header);
    for (name, row) in cm.class_names.iter().zip(&cm.counts) {
        let mut fields = vec![name.clone()];
        fields.extend(row.iter().map(u64::to_string));
        table.rows.push(fields);
    }
    table
}
