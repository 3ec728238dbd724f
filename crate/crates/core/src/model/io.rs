//! Model JSON and training log CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::head::{FusionHead, HeadKind};
use super::train::{LogRow, TrainConfig};
use crate::error::{Error, Result};
use crate::meta::Meta;
use crate::table::{write_file, CsvTable};

/// Serialized head plus everything needed to rebuild its inputs. Floats use
/// shortest round-trip formatting, so reading back is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub meta: Meta,
    pub kind: HeadKind,
    pub num_classes: usize,
    pub feature_config_hash: String,
    pub stats_config_hash: Option<String>,
    pub embedding: Option<String>,
    pub train_config: TrainConfig,
    pub best_epoch: usize,
    pub head: FusionHead,
}

impl ModelFile {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_file(path.as_ref(), text)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, "model json", e.to_string()))?;
        let h = &file.head;
        let width = h.backbone_dim + h.dgme_dim;
        let consistent = h.class_names.len() == file.num_classes
            && h.w.len() == file.num_classes * width
            && h.b.len() == file.num_classes
            && h.ln_gain.len() == h.dgme_dim
            && h.ln_bias.len() == h.dgme_dim
            && h.kind() == file.kind;
        if !consistent {
            return Err(Error::format(path, "model json", "parameter shapes disagree with declared dimensions"));
        }
        Ok(file)
    }
}

pub fn log_table(log: &[LogRow], meta: Meta) -> CsvTable {
    let header = ["epoch", "step", "lr", "train_loss", "val_macro_f1", "alpha"];
    let mut table = CsvTable::new(meta, header.iter().map(|s| s.to_string()).collect());
    for r in log {
        table.rows.push(vec![
            r.epoch.to_string(),
            r.step.to_string(),
            r.lr.to_string(),
            r.train_loss.to_string(),
            r.val_macro_f1.to_string(),
            r.alpha.to_string(),
        ]);
    }
    table
}
