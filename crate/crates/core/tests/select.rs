mod common;

use common::*;
use occupancy_core::features::FeatureMatrix;
use occupancy_core::regress::MultinomialOptions;
use occupancy_core::select::{forward_stepwise, Family};
use occupancy_core::ExecMode;
use proptest::prelude::*;
use rand::Rng;

fn named(cols: Vec<Vec<f64>>, names: &[&str], y: Vec<f64>) -> FeatureMatrix {
    FeatureMatrix::new(names.iter().map(|s| s.to_string()).collect(), cols, "y", y).unwrap()
}

#[test]
fn signal_beats_noise_and_matches_best_subset() {
    let mut r = rng(41);
    let n = 200;
    let x1: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
    let x2: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
    let y: Vec<f64> = x1.iter().map(|v| 2.0 * v + 0.1 * gaussian(&mut r)).collect();

    let subsets: [&[&Vec<f64>]; 4] = [&[], &[&x1], &[&x2], &[&x1, &x2]];
    let aics: Vec<f64> = subsets
        .iter()
        .map(|s| linear_aic(&s.iter().map(|c| (*c).clone()).collect::<Vec<_>>(), &y))
        .collect();
    let best = (0..4).min_by(|&a, &b| aics[a].total_cmp(&aics[b])).unwrap();
    assert_eq!(best, 1, "best subset by AIC should be {{x1}}: {aics:?}");

    let m = named(vec![x1, x2], &["x1", "x2"], y);
    let trace = forward_stepwise(&m, Family::Linear, &["x1", "x2"], ExecMode::Sequential).unwrap();
    assert_eq!(trace.selected(), vec!["x1"]);
    assert!((trace.final_aic() - aics[1]).abs() < 1e-8 * aics[1].abs());
    assert!((trace.start_aic - aics[0]).abs() < 1e-8 * aics[0].abs());
}

/// Fraction of seeds in which stepwise keeps the intercept-only model when
/// every candidate is independent noise.
fn null_retention(candidates: usize, seeds: u64) -> f64 {
    let names: Vec<String> = (0..candidates).map(|j| format!("z{j}")).collect();
    let mut kept = 0;
    for seed in 0..seeds {
        let mut r = rng(1000 + seed);
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..candidates)
            .map(|_| (0..n).map(|_| gaussian(&mut r)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
        let m = FeatureMatrix::new(names.clone(), cols, "y", y).unwrap();
        let trace = forward_stepwise(&m, Family::Linear, &names, ExecMode::Sequential).unwrap();
        if trace.steps.is_empty() {
            kept += 1;
        }
    }
    kept as f64 / seeds as f64
}

// Under the null, a candidate enters when its likelihood-ratio statistic
// (asymptotically chi-squared with 1 df) exceeds the AIC penalty of 2, which
// happens with probability P(chi2_1 > 2) = 0.1573. With k independent noise
// candidates the intercept-only model survives with probability 0.8427^k.

#[test]
fn single_noise_candidate_enters_at_the_aic_rate() {
    let kept = null_retention(1, 400);
    assert!((0.77..=0.92).contains(&kept), "kept intercept-only in {kept}");
}

#[test]
fn several_noise_candidates_compound_the_rate() {
    let kept = null_retention(5, 300);
    // 0.8427^5 = 0.425
    assert!((0.33..=0.52).contains(&kept), "kept intercept-only in {kept}");
}

#[test]
fn multinomial_stepwise_finds_the_informative_feature() {
    let mut r = rng(42);
    let n = 300;
    let signal: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
    let noise: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
    let y: Vec<f64> = signal
        .iter()
        .map(|s| {
            let p = class_probabilities(&[vec![0.0, 2.0], vec![0.0, 4.0]], &[*s]);
            let u: f64 = r.random();
            if u < p[0] {
                0.0
            } else if u < p[0] + p[1] {
                1.0
            } else {
                2.0
            }
        })
        .collect();
    let m = named(vec![noise, signal], &["noise", "signal"], y);
    let trace = forward_stepwise(
        &m,
        Family::Multinomial(MultinomialOptions::default()),
        &["noise", "signal"],
        ExecMode::Sequential,
    )
    .unwrap();
    assert_eq!(trace.selected().first(), Some(&"signal"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aic_strictly_decreases_and_reruns_are_identical(seed in any::<u64>(), p in 1usize..7) {
        let mut r = rng(seed);
        let (cols, y) = linear_instance(&mut r, 60, p);
        let m = matrix(cols, y);
        let names: Vec<String> = m.names().to_vec();
        let a = forward_stepwise(&m, Family::Linear, &names, ExecMode::Sequential).unwrap();
        let b = forward_stepwise(&m, Family::Linear, &names, ExecMode::Parallel).unwrap();
        let mut last = a.start_aic;
        for s in &a.steps {
            prop_assert!(s.aic < last);
            last = s.aic;
        }
        prop_assert_eq!(&a.steps, &b.steps);
        prop_assert_eq!(a.start_aic.to_bits(), b.start_aic.to_bits());
    }

    #[test]
    fn selection_ignores_column_scale(seed in any::<u64>(), p in 1usize..6, pick in any::<prop::sample::Index>()) {
        let mut r = rng(seed);
        let (mut cols, y) = linear_instance(&mut r, 80, p);
        // Drop some coefficients to zero so selection is not trivially "all".
        let y: Vec<f64> = y.iter().zip(&cols[0]).map(|(v, x)| v - 0.9 * x).collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let before = forward_stepwise(&matrix(cols.clone(), y.clone()), Family::Linear, &names, ExecMode::Sequential).unwrap();
        let j = pick.index(p);
        for v in &mut cols[j] {
            *v *= 1000.0;
        }
        let after = forward_stepwise(&matrix(cols, y), Family::Linear, &names, ExecMode::Sequential).unwrap();
        let mut a = before.selected();
        let mut b = after.selected();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
