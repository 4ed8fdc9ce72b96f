//! Train/validation splitting, prediction metrics, correlation, occupancy
//! binning and summary statistics.
//!
//! # Random split
//!
//! [`split`] shuffles `0..n` with a Fisher–Yates pass driven by ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`). At step `i` (from
//! `n - 1` down to 1) the swap partner is drawn uniformly from `0..=i` by
//! Lemire's multiply-and-reject method on `next_u64`. The first
//! `round(frac * n)` shuffled indices form the training set. The procedure
//! is implemented here rather than delegated to `rand`'s shuffle so that a
//! given `(n, frac, seed)` always yields the same split.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::feature_value;
use crate::ingest::CleanListing;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitIndices {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Uniform integer in `0..bound` (bound >= 1).
fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let wide = u128::from(rng.next_u64()) * u128::from(bound);
        if (wide as u64) >= threshold {
            return (wide >> 64) as u64;
        }
    }
}

/// Seeded random permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = bounded(&mut rng, i as u64 + 1) as usize;
        idx.swap(i, j);
    }
    idx
}

pub fn split(n: usize, frac: f64, seed: u64) -> Result<SplitIndices> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Domain(format!("train fraction {frac} not in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("cannot split {n} rows")));
    }
    let n_train = (frac * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Domain(format!(
            "fraction {frac} of {n} rows leaves an empty part"
        )));
    }
    let mut perm = permutation(n, seed);
    let validation = perm.split_off(n_train);
    Ok(SplitIndices {
        seed,
        train: perm,
        validation,
    })
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::Empty("no values".into()));
    }
    Ok(())
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    same_len(predicted.len(), actual.len())?;
    let total: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok(total / predicted.len() as f64)
}

pub fn accuracy<T: PartialEq>(predicted: &[T], actual: &[T]) -> Result<f64> {
    same_len(predicted.len(), actual.len())?;
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Most frequent label, ties to the smallest label.
pub fn majority_label<T: Ord + Clone>(labels: &[T]) -> Option<T> {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut best: Option<(&T, usize)> = None;
    for (label, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l.clone())
}

/// Accuracy on `test` of always predicting the most frequent `train` label.
pub fn majority_baseline<T: Ord + Clone>(train: &[T], test: &[T]) -> Result<f64> {
    let label = majority_label(train).ok_or_else(|| Error::Empty("no training labels".into()))?;
    let predicted = vec![label; test.len()];
    accuracy(&predicted, test)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty("pearson needs at least two pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("pearson of a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Occupancy bin: `floor(rate * nbins)`, with `rate == 1` in the last bin.
pub fn bin_occupancy(rate: f64, nbins: usize) -> Result<usize> {
    if nbins == 0 {
        return Err(Error::Domain("nbins must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Domain(format!("rate {rate} outside [0, 1]")));
    }
    Ok(((rate * nbins as f64).floor() as usize).min(nbins - 1))
}

/// Mean of `values` within each bin; empty bins are absent.
pub fn group_means_values(values: &[f64], bins: &[usize]) -> Result<BTreeMap<usize, f64>> {
    same_len(values.len(), bins.len())?;
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (&v, &b) in values.iter().zip(bins) {
        let e = acc.entry(b).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(acc.into_iter().map(|(b, (s, c))| (b, s / c as f64)).collect())
}

/// Mean of the named listing field within each bin.
pub fn group_means(rows: &[CleanListing], bins: &[usize], field: &str) -> Result<BTreeMap<usize, f64>> {
    if rows.is_empty() {
        return Err(Error::Empty("no rows".into()));
    }
    let values = rows
        .iter()
        .map(|r| feature_value(r, field).ok_or_else(|| Error::UnknownFeature(field.to_string())))
        .collect::<Result<Vec<_>>>()?;
    group_means_values(&values, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    /// Left-closed bins `[k w, (k + 1) w)` covering the data, empty bins
    /// included.
    pub histogram: Vec<HistogramBin>,
}

pub fn mean_sd(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("no values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, sd))
}

pub fn distribution_stats(values: &[f64], bin_width: f64) -> Result<DistributionStats> {
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(Error::Domain(format!("bin width {bin_width} must be > 0")));
    }
    let (mean, sd) = mean_sd(values)?;
    let index = |v: f64| (v / bin_width).floor() as i64;
    let lo = values.iter().map(|&v| index(v)).min().expect("non-empty");
    let hi = values.iter().map(|&v| index(v)).max().expect("non-empty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(index(v) - lo) as usize] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let k = lo + i as i64;
            HistogramBin {
                low: k as f64 * bin_width,
                high: (k + 1) as f64 * bin_width,
                count,
            }
        })
        .collect();
    Ok(DistributionStats {
        n: values.len(),
        mean,
        sd,
        histogram,
    })
}

/// Evaluation summary written by the `evaluate` command.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mse: Option<f64>,
    pub accuracy: Option<f64>,
    pub baseline_accuracy: Option<f64>,
    /// Keyed `"a|b"`.
    pub correlations: BTreeMap<String, f64>,
    pub n_train: usize,
    pub n_validation: usize,
    pub seed: u64,
}

/// Pearson correlations of each named pair over `rows`; pairs involving a
/// constant column are omitted.
pub fn correlation_table(rows: &[CleanListing], pairs: &[(&str, &str)]) -> Result<BTreeMap<String, f64>> {
    let column = |name: &str| {
        rows.iter()
            .map(|r| feature_value(r, name).ok_or_else(|| Error::UnknownFeature(name.to_string())))
            .collect::<Result<Vec<_>>>()
    };
    let mut out = BTreeMap::new();
    let names: BTreeSet<&str> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let mut cols = BTreeMap::new();
    for n in names {
        cols.insert(n, column(n)?);
    }
    for (a, b) in pairs {
        match pearson(&cols[a], &cols[b]) {
            Ok(r) => {
                out.insert(format!("{a}|{b}"), r);
            }
            Err(Error::Degenerate(_) | Error::Empty(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
