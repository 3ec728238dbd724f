use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedSet, Entry};
use crate::error::{Error, Result};
use crate::meta::derive_seed;

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Per-class shuffled split. Each part first receives `⌊r·n⌋` entries of a
/// class; leftovers go one at a time to test, train, val, in that order.
/// Classes absent from the set contribute nothing.
pub fn stratified_split(
    set: &AnnotatedSet,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(AnnotatedSet, AnnotatedSet, AnnotatedSet)> {
    let (rt, rv, rs) = ratios;
    if [rt, rv, rs].iter().any(|r| r.is_nan() || *r < 0.0) || ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must be nonnegative and sum to 1, got {ratios:?}")));
    }
    let mut parts: [Vec<Entry>; 3] = Default::default();
    for class in &set.classes {
        let mut members: Vec<Entry> = set.of_class(class).cloned().collect();
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            return Err(Error::ClassTooSmall { class: class.clone(), have: n, need: 3 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("split/{class}")));
        members.shuffle(&mut rng);
        let quota = |r: f64| (r * n as f64 + 1e-9).floor() as usize;
        let mut sizes = [quota(rt), quota(rv), quota(rs)];
        let mut left = n - sizes.iter().sum::<usize>();
        for part in [2, 0, 1].into_iter().cycle() {
            if left == 0 {
                break;
            }
            sizes[part] += 1;
            left -= 1;
        }
        let mut rest = members.into_iter();
        for (part, size) in parts.iter_mut().zip(sizes) {
            part.extend(rest.by_ref().take(size));
        }
    }
    let [train, val, test] = parts;
    let make = |entries| AnnotatedSet::new(set.classes.clone(), entries);
    Ok((make(train)?, make(val)?, make(test)?))
}

/// Grows each class in `targets` to its target count: whole cyclic copies of
/// the class followed by a seeded sample without replacement for the
/// remainder. Classes without a target are kept as they are.
pub fn oversample(train: &AnnotatedSet, targets: &BTreeMap<String, usize>, seed: u64) -> Result<AnnotatedSet> {
    for name in targets.keys() {
        if train.class_index(name).is_none() {
            return Err(Error::Config(format!("oversampling target for unknown class {name:?}")));
        }
    }
    let mut entries = Vec::new();
    for class in &train.classes {
        let members: Vec<&Entry> = train.of_class(class).collect();
        let n = members.len();
        let Some(&target) = targets.get(class) else {
            entries.extend(members.into_iter().cloned());
            continue;
        };
        if target < n {
            return Err(Error::TargetBelowCount { class: class.clone(), target, have: n });
        }
        if n == 0 {
            if target > 0 {
                return Err(Error::ClassTooSmall { class: class.clone(), have: 0, need: 1 });
            }
            continue;
        }
        for _ in 0..target / n {
            entries.extend(members.iter().map(|e| (*e).clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("oversample/{class}")));
        entries.extend(index::sample(&mut rng, n, target % n).into_iter().map(|i| members[i].clone()));
    }
    AnnotatedSet::new(train.classes.clone(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(counts: &[(&str, usize)]) -> AnnotatedSet {
        let classes = counts.iter().map(|(c, _)| c.to_string()).collect();
        let entries =
            counts.iter().flat_map(|&(c, n)| (0..n).map(move |i| Entry::new(format!("{c}{i:04}"), c))).collect();
        AnnotatedSet::new(classes, entries).unwrap()
    }

    fn sizes(parts: &(AnnotatedSet, AnnotatedSet, AnnotatedSet)) -> Vec<(usize, usize, usize)> {
        let (a, b, c) = (parts.0.counts(), parts.1.counts(), parts.2.counts());
        (0..a.len()).map(|i| (a[i], b[i], c[i])).collect()
    }

    #[test]
    fn ten_splits_exactly() {
        let parts = stratified_split(&set(&[("pan", 10)]), DEFAULT_RATIOS, 1).unwrap();
        assert_eq!(sizes(&parts), vec![(6, 2, 2)]);
    }

    #[test]
    fn remainders_fill_test_then_train_then_val() {
        let parts = stratified_split(&set(&[("a", 4), ("b", 8), ("c", 9)]), DEFAULT_RATIOS, 1).unwrap();
        // 4: (2,0,0)+1 test+1 train; 8: (4,1,1)+test+train; 9: (5,1,1)+test+train
        assert_eq!(sizes(&parts), vec![(3, 0, 1), (5, 1, 2), (6, 1, 2)]);
    }

    #[test]
    fn small_classes_rejected() {
        assert!(matches!(stratified_split(&set(&[("a", 2)]), DEFAULT_RATIOS, 1), Err(Error::ClassTooSmall { .. })));
        assert!(stratified_split(&set(&[("a", 5)]), (0.5, 0.5, 0.5), 1).is_err());
    }

    #[test]
    fn split_depends_on_seed_only() {
        let s = set(&[("a", 30), ("b", 20)]);
        assert_eq!(stratified_split(&s, DEFAULT_RATIOS, 4).unwrap(), stratified_split(&s, DEFAULT_RATIOS, 4).unwrap());
        assert_ne!(
            stratified_split(&s, DEFAULT_RATIOS, 4).unwrap().0,
            stratified_split(&s, DEFAULT_RATIOS, 5).unwrap().0
        );
    }

    #[test]
    fn three_to_seven_is_two_copies_plus_one() {
        let s = set(&[("z", 3)]);
        let out = oversample(&s, &BTreeMap::from([("z".to_string(), 7)]), 2).unwrap();
        assert_eq!(out.len(), 7);
        let mut reps: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &out.entries {
            *reps.entry(e.clip_id.as_str()).or_default() += 1;
        }
        let mut counts: Vec<usize> = reps.values().copied().collect();
        counts.sort();
        assert_eq!(counts, vec![2, 2, 3]);
    }

    #[test]
    fn target_equal_to_count_is_identity() {
        let s = set(&[("a", 5), ("b", 2)]);
        let t = BTreeMap::from([("a".to_string(), 5), ("b".to_string(), 2)]);
        assert_eq!(oversample(&s, &t, 9).unwrap(), s);
    }

    #[test]
    fn target_below_count_rejected() {
        let s = set(&[("a", 5)]);
        assert!(matches!(
            oversample(&s, &BTreeMap::from([("a".to_string(), 4)]), 0),
            Err(Error::TargetBelowCount { .. })
        ));
    }
}
