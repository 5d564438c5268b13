//! Seeded stratified train/test split.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::synth::mix_seed;

/// Indices into the split collection, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Holds out `round(n_c · test_fraction)` examples of every class `c`,
/// leaving at least one for training.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::invalid(format!("test fraction {test_fraction} must lie in [0, 1)")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for (class, mut members) in by_class {
        if members.len() < 2 {
            return Err(Error::invalid(format!(
                "class {class} has {} example(s); stratified splitting needs at least 2",
                members.len()
            )));
        }
        let n = members.len();
        let n_test = ((n as f64 * test_fraction).round() as usize).min(n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, class as u64, 0));
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(classes: usize, per: usize) -> Vec<usize> {
        (0..classes).flat_map(|c| std::iter::repeat_n(c, per)).collect()
    }

    #[test]
    fn sixteen_by_thirty_holds_out_ninety_six() {
        let l = labels(16, 30);
        let s = stratified_split(&l, 0.2, 3).unwrap();
        assert_eq!(s.test.len(), 96);
        for c in 0..16 {
            assert_eq!(s.test.iter().filter(|&&i| l[i] == c).count(), 6);
        }
    }

    #[test]
    fn zero_fraction_keeps_everything() {
        let s = stratified_split(&labels(3, 4), 0.0, 0).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.train, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn partition_and_proportion() {
        let l: Vec<usize> = (0..97).map(|i| (i * 7) % 5).collect();
        for seed in 0..10 {
            let s = stratified_split(&l, 0.3, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..97).collect::<Vec<_>>());
            for c in 0..5 {
                let n = l.iter().filter(|&&x| x == c).count() as f64;
                let t = s.test.iter().filter(|&&i| l[i] == c).count() as f64;
                assert!((t - 0.3 * n).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn seeded() {
        let l = labels(4, 10);
        assert_eq!(stratified_split(&l, 0.2, 9).unwrap(), stratified_split(&l, 0.2, 9).unwrap());
        assert_ne!(stratified_split(&l, 0.2, 9).unwrap(), stratified_split(&l, 0.2, 10).unwrap());
    }

    #[test]
    fn singleton_class_rejected() {
        assert!(matches!(stratified_split(&[0, 0, 1], 0.2, 0), Err(Error::InvalidValue(_))));
    }
}
