use std::collections::{BTreeMap, BTreeSet};

use dgme_core::eval::{evaluate, oversample, stratified_split, AnnotatedSet, ConfusionMatrix, Entry, DEFAULT_RATIOS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(counts: &[(&str, usize)]) -> AnnotatedSet {
    let classes = counts.iter().map(|(c, _)| c.to_string()).collect();
    let entries = counts.iter().flat_map(|&(c, n)| (0..n).map(move |i| Entry::new(format!("{c}_{i:04}"), c))).collect();
    AnnotatedSet::new(classes, entries).unwrap()
}

fn split_sizes(set: &AnnotatedSet, seed: u64) -> Vec<(usize, usize, usize)> {
    let (tr, va, te) = stratified_split(set, DEFAULT_RATIOS, seed).unwrap();
    let (a, b, c) = (tr.counts(), va.counts(), te.counts());
    (0..a.len()).map(|i| (a[i], b[i], c[i])).collect()
}

#[test]
fn historian_counts_reproduce_reference_splits() {
    let set = corpus(&[("tilt", 116), ("pan", 304), ("zoom", 77), ("track", 252)]);
    for seed in [0, 1, 42] {
        assert_eq!(split_sizes(&set, seed), vec![(69, 23, 24), (183, 60, 61), (46, 15, 16), (151, 50, 51)]);
    }
}

#[test]
fn static_82_partitions_but_cannot_match_the_reference_83() {
    let set = corpus(&[("static", 82)]);
    let (tr, va, te) = stratified_split(&set, DEFAULT_RATIOS, 3).unwrap();
    assert_eq!((tr.len(), va.len(), te.len()), (49, 16, 17));
    let mut all: Vec<_> = tr.entries.iter().chain(&va.entries).chain(&te.entries).map(|e| e.clip_id.clone()).collect();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 82);
}

#[test]
fn modern_oversampling_targets() {
    let set = corpus(&[("static", 1304), ("tilt", 63), ("pan", 73), ("zoom", 1212)]);
    let targets: BTreeMap<String, usize> = [("static", 1686), ("tilt", 1280), ("pan", 1460), ("zoom", 1820)]
        .iter()
        .map(|(c, n)| (c.to_string(), *n))
        .collect();
    let out = oversample(&set, &targets, 5).unwrap();
    assert_eq!(out.counts(), vec![1686, 1280, 1460, 1820]);
    for class in ["static", "tilt", "pan", "zoom"] {
        let before: BTreeSet<_> = set.of_class(class).map(|e| &e.clip_id).collect();
        let after: BTreeSet<_> = out.of_class(class).map(|e| &e.clip_id).collect();
        assert_eq!(before, after, "{class}");
    }
    assert_eq!(oversample(&set, &targets, 5).unwrap(), out);
}

#[test]
fn uniform_random_predictor_macro_f1_near_one_fifth() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let names: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
    let truth: Vec<usize> = (0..10_000).map(|i| i % 5).collect();
    let predicted: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..5)).collect();
    let r = ConfusionMatrix::from_indices(names, &truth, &predicted).report();
    assert!((r.macro_f1 - 0.2).abs() < 0.05, "{}", r.macro_f1);
}

fn labelled(k: usize, pairs: &[(usize, usize)]) -> (AnnotatedSet, Vec<Entry>) {
    let classes: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
    let truth = pairs.iter().enumerate().map(|(i, (t, _))| Entry::new(format!("id{i}"), classes[*t].clone())).collect();
    let preds = pairs.iter().enumerate().map(|(i, (_, p))| Entry::new(format!("id{i}"), classes[*p].clone())).collect();
    (AnnotatedSet::new(classes, truth).unwrap(), preds)
}

fn pairs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..6).prop_flat_map(|k| (Just(k), prop::collection::vec((0..k, 0..k), 1..80)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metrics_ignore_prediction_order((k, pairs) in pairs(), seed: u64) {
        let (truth, mut preds) = labelled(k, &pairs);
        let (cm, r) = evaluate(&preds, &truth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(preds.as_mut_slice(), &mut rng);
        let (cm2, r2) = evaluate(&preds, &truth).unwrap();
        prop_assert_eq!(cm, cm2);
        prop_assert_eq!(r, r2);
    }

    #[test]
    fn confusion_rows_sum_to_class_counts((k, pairs) in pairs()) {
        let (truth, preds) = labelled(k, &pairs);
        let (cm, r) = evaluate(&preds, &truth).unwrap();
        let counts = truth.counts();
        for (row, n) in cm.counts.iter().zip(&counts) {
            prop_assert_eq!(row.iter().sum::<u64>(), *n as u64);
        }
        prop_assert_eq!(cm.total(), pairs.len() as u64);
        for m in &r.per_class {
            prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall) && (0.0..=1.0).contains(&m.f1));
        }
        let mean_f1 = r.per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64;
        prop_assert!((mean_f1 - r.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn split_is_a_partition_with_quota_sizes(counts in prop::collection::vec(3usize..60, 1..5), seed: u64) {
        let named: Vec<(String, usize)> = counts.iter().enumerate().map(|(i, n)| (format!("k{i}"), *n)).collect();
        let refs: Vec<(&str, usize)> = named.iter().map(|(c, n)| (c.as_str(), *n)).collect();
        let set = corpus(&refs);
        let (tr, va, te) = stratified_split(&set, DEFAULT_RATIOS, seed).unwrap();
        let mut ids: Vec<&str> = tr.entries.iter().chain(&va.entries).chain(&te.entries).map(|e| e.clip_id.as_str()).collect();
        prop_assert_eq!(ids.len(), set.len());
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), set.len());
        for (i, &n) in counts.iter().enumerate() {
            let (a, b, c) = (tr.counts()[i], va.counts()[i], te.counts()[i]);
            let base = [n * 6 / 10, n * 2 / 10, n * 2 / 10];
            prop_assert!(a >= base[0] && b >= base[1] && c >= base[2]);
            prop_assert!(a - base[0] <= 1 && b - base[1] <= 1 && c - base[2] <= 1);
            prop_assert_eq!(a + b + c, n);
        }
    }
}
