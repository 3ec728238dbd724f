//! Label schemas, dataset splits, oversampling and classification metrics.

pub mod io;
mod metrics;
mod schema;
mod split;

pub use metrics::{evaluate, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use schema::{remap_labels, ClassSchema, DROP, SCHEMA_NAMES};
pub use split::{oversample, stratified_split, DEFAULT_RATIOS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub clip_id: String,
    pub label: String,
}

impl Entry {
    pub fn new(clip_id: impl Into<String>, label: impl Into<String>) -> Self {
        Self { clip_id: clip_id.into(), label: label.into() }
    }
}

/// Entries whose labels all belong to `classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSet {
    pub classes: Vec<String>,
    pub entries: Vec<Entry>,
}

impl AnnotatedSet {
    pub fn new(classes: Vec<String>, entries: Vec<Entry>) -> Result<Self> {
        for e in &entries {
            if !classes.contains(&e.label) {
                return Err(Error::UnknownLabel { clip_id: e.clip_id.clone(), label: e.label.clone() });
            }
        }
        Ok(Self { classes, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Per-class counts in class order.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for e in &self.entries {
            counts[self.class_index(&e.label).expect("label checked on construction")] += 1;
        }
        counts
    }

    /// Entries of one class, in set order.
    pub fn of_class<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.label == class)
    }
}
