mod common;

use std::collections::BTreeMap;

use common::*;
use occupancy_core::evaluate::{
    accuracy, bin_occupancy, distribution_stats, group_means_values, majority_baseline, mean_sd, mse, pearson,
    permutation, split,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn different_seeds_give_different_permutations() {
    assert_ne!(permutation(1000, 1), permutation(1000, 2));
    assert_eq!(permutation(1000, 1), permutation(1000, 1));
}

#[test]
fn metric_examples() {
    assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 0, 0]).unwrap(), 0.5);
    assert_eq!(majority_baseline(&["A", "A", "A", "B", "B"], &["A", "B"]).unwrap(), 0.5);
    assert_eq!(majority_baseline(&["A", "B", "B", "A"], &["A"]).unwrap(), 1.0);
}

#[test]
fn metrics_match_direct_loops() {
    let mut r = rng(51);
    let x: Vec<f64> = (0..100).map(|_| gaussian(&mut r)).collect();
    let y: Vec<f64> = x.iter().map(|v| 0.3 * v + gaussian(&mut r)).collect();
    let direct_mse = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 100.0;
    assert!((mse(&x, &y).unwrap() - direct_mse).abs() < 1e-12);
    assert!((pearson(&x, &y).unwrap() - direct_pearson(&x, &y)).abs() < 1e-12);

    let (m, s) = two_pass_mean_sd(&y);
    let (gm, gs) = mean_sd(&y).unwrap();
    assert!((m - gm).abs() < 1e-12 && (s - gs).abs() < 1e-12);
    let stats = distribution_stats(&y, 0.5).unwrap();
    assert_eq!(stats.histogram.iter().map(|b| b.count).sum::<usize>(), 100);
    for b in &stats.histogram {
        let direct = y.iter().filter(|v| **v >= b.low && **v < b.high).count();
        assert_eq!(b.count, direct);
    }

    let bins: Vec<usize> = (0..100).map(|_| r.random_range(0..7)).collect();
    let mut loop_oracle: BTreeMap<usize, f64> = BTreeMap::new();
    for b in 0..7 {
        let members: Vec<f64> = (0..100).filter(|&i| bins[i] == b).map(|i| y[i]).collect();
        if !members.is_empty() {
            loop_oracle.insert(b, members.iter().sum::<f64>() / members.len() as f64);
        }
    }
    let got = group_means_values(&y, &bins).unwrap();
    assert_eq!(got.keys().collect::<Vec<_>>(), loop_oracle.keys().collect::<Vec<_>>());
    for (k, v) in &loop_oracle {
        assert!((got[k] - v).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn split_partitions_indices(n in 2usize..500, frac in 0.05f64..0.95, seed in any::<u64>()) {
        if let Ok(s) = split(n, frac, seed) {
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.train.len(), (frac * n as f64).round() as usize);
            prop_assert_eq!(split(n, frac, seed).unwrap(), s);
        }
    }

    #[test]
    fn mse_zero_iff_equal(a in prop::collection::vec(-1e3f64..1e3, 1..50), k in any::<prop::sample::Index>(), d in 1e-3f64..1.0) {
        prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[k.index(a.len())] += d;
        prop_assert!(mse(&a, &b).unwrap() > 0.0);
    }

    #[test]
    fn pearson_affine_invariance(seed in any::<u64>(), scale in 0.01f64..100.0, shift in -100.0f64..100.0) {
        let mut r = rng(seed);
        let x: Vec<f64> = (0..60).map(|_| gaussian(&mut r)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + gaussian(&mut r)).collect();
        let base = pearson(&x, &y).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let negated: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((pearson(&moved, &y).unwrap() - base).abs() < 1e-12);
        prop_assert!((pearson(&x, &negated).unwrap() + base).abs() < 1e-12);
    }

    #[test]
    fn bins_are_valid_and_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, nbins in 1usize..50) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (bl, bh) = (bin_occupancy(lo, nbins).unwrap(), bin_occupancy(hi, nbins).unwrap());
        prop_assert!(bl <= bh && bh < nbins);
    }
}
