use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnnotatedSet, Entry};
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        Self { class_names, counts: vec![vec![0; k]; k] }
    }

    /// From parallel lists of true and predicted class indices.
    pub fn from_indices(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Self {
        let mut cm = Self::new(class_names);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.counts[t][p] += 1;
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Precision, recall and F1 per class with 0/0 taken as 0; macros are
    /// unweighted class means.
    pub fn report(&self) -> MetricsReport {
        let k = self.class_names.len();
        let trace: u64 = (0..k).map(|i| self.counts[i][i]).sum();
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = self.counts[c][c];
                let support: u64 = self.counts[c].iter().sum();
                let predicted: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
                ClassMetrics { class: self.class_names[c].clone(), precision, recall, f1, support }
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if k == 0 {
                0.0
            } else {
                per_class.iter().map(f).sum::<f64>() / k as f64
            }
        };
        MetricsReport {
            accuracy: ratio(trace, self.total()),
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            per_class,
        }
    }
}

/// Scores predictions against the truth set. Every truth id needs exactly
/// one prediction; predictions for unknown ids are errors too.
pub fn evaluate(predictions: &[Entry], truth: &AnnotatedSet) -> Result<(ConfusionMatrix, MetricsReport)> {
    let mut predicted: BTreeMap<&str, &str> = BTreeMap::new();
    for p in predictions {
        if predicted.insert(p.clip_id.as_str(), p.label.as_str()).is_some() {
            return Err(Error::Config(format!("duplicate prediction for {:?}", p.clip_id)));
        }
    }
    let truth_ids: BTreeSet<&str> = truth.entries.iter().map(|e| e.clip_id.as_str()).collect();
    let missing: Vec<String> =
        truth_ids.iter().filter(|id| !predicted.contains_key(*id)).map(|s| s.to_string()).collect();
    let extra: Vec<String> = predicted.keys().filter(|id| !truth_ids.contains(*id)).map(|s| s.to_string()).collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::IdMismatch { missing, extra });
    }
    let mut cm = ConfusionMatrix::new(truth.classes.clone());
    for e in &truth.entries {
        let label = predicted[e.clip_id.as_str()];
        let p = truth
            .class_index(label)
            .ok_or_else(|| Error::UnknownLabel { clip_id: e.clip_id.clone(), label: label.to_string() })?;
        let t = truth.class_index(&e.label).expect("label checked on construction");
        cm.counts[t][p] += 1;
    }
    let report = cm.report();
    Ok((cm, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn hand_computed_two_class_example() {
        let cm = ConfusionMatrix { class_names: names(2), counts: vec![vec![1, 1], vec![0, 2]] };
        let r = cm.report();
        assert!((r.accuracy - 0.75).abs() < 1e-12);
        assert!((r.per_class[0].precision - 1.0).abs() < 1e-12);
        assert!((r.per_class[0].recall - 0.5).abs() < 1e-12);
        assert!((r.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class[1].precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class[1].f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_scores_zero_and_counts_in_macro() {
        let cm = ConfusionMatrix::from_indices(names(3), &[0, 1], &[0, 1]);
        let r = cm.report();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_checks_ids() {
        let truth = AnnotatedSet::new(names(2), vec![Entry::new("a", "c0"), Entry::new("b", "c1")]).unwrap();
        let err = evaluate(&[Entry::new("a", "c0"), Entry::new("x", "c1")], &truth).unwrap_err();
        match err {
            Error::IdMismatch { missing, extra } => {
                assert_eq!(missing, vec!["b"]);
                assert_eq!(extra, vec!["x"]);
            }
            other => panic!("{other}"),
        }
        assert!(evaluate(&[Entry::new("a", "c0"), Entry::new("b", "zz")], &truth).is_err());
        let (cm, r) = evaluate(&[Entry::new("b", "c1"), Entry::new("a", "c1")], &truth).unwrap();
        assert_eq!(cm.counts, vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(r.accuracy, 0.5);
    }
}
