use std::collections::BTreeMap;

use serde::Deserialize;

use super::{AnnotatedSet, Entry};
use crate::error::{Error, Result};

/// Remap target that removes an entry.
pub const DROP: &str = "DROP";

pub const SCHEMA_NAMES: [&str; 2] = ["modern4", "historian5"];

const MODERN4: &str = include_str!("../../data/schemas/modern4.json");
const HISTORIAN5: &str = include_str!("../../data/schemas/historian5.json");

/// Target classes plus a table folding source labels into them. Class names
/// map to themselves without a table entry.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct ClassSchema {
    pub name: String,
    pub classes: Vec<String>,
    #[serde(default)]
    pub remap: BTreeMap<String, String>,
}

impl ClassSchema {
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "modern4" => MODERN4,
            "historian5" => HISTORIAN5,
            other => {
                return Err(Error::Config(format!(
                    "unknown schema {other:?} (expected one of: {})",
                    SCHEMA_NAMES.join(", ")
                )))
            }
        };
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config(format!("schema {} has no classes", self.name)));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return Err(Error::Config(format!("schema {} repeats class {c:?}", self.name)));
            }
        }
        for (src, dst) in &self.remap {
            if dst != DROP && !self.classes.contains(dst) {
                return Err(Error::Config(format!("schema {} maps {src:?} to unknown class {dst:?}", self.name)));
            }
        }
        Ok(())
    }

    /// `Some(Some(class))` to keep, `Some(None)` to drop, `None` if unknown.
    pub fn map(&self, label: &str) -> Option<Option<&str>> {
        match self.remap.get(label) {
            Some(dst) if dst == DROP => Some(None),
            Some(dst) => Some(Some(dst.as_str())),
            None => self.classes.iter().find(|c| *c == label).map(|c| Some(c.as_str())),
        }
    }
}

/// Applies the schema's remap table, removing dropped entries.
pub fn remap_labels(raw: &[Entry], schema: &ClassSchema) -> Result<AnnotatedSet> {
    let mut entries = Vec::with_capacity(raw.len());
    for e in raw {
        match schema.map(&e.label) {
            None => return Err(Error::UnknownLabel { clip_id: e.clip_id.clone(), label: e.label.clone() }),
            Some(None) => {}
            Some(Some(label)) => entries.push(Entry::new(e.clip_id.clone(), label)),
        }
    }
    AnnotatedSet::new(schema.classes.clone(), entries)
}
