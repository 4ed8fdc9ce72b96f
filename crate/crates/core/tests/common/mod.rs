//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use occupancy_core::features::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// `[intercept, b...]` solving `(Z'Z) b = Z'y` with `Z = [1, X]`.
pub fn normal_equations(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let z: Vec<Vec<f64>> = std::iter::once(vec![1.0; n]).chain(cols.iter().cloned()).collect();
    let q = z.len();
    let a = (0..q)
        .map(|i| (0..q).map(|j| (0..n).map(|r| z[i][r] * z[j][r]).sum()).collect())
        .collect();
    let b = (0..q).map(|i| (0..n).map(|r| z[i][r] * y[r]).sum()).collect();
    gauss_solve(a, b)
}

/// `[intercept, b...]` with `b = (Xc'Xc + lambda I)^-1 Xc'yc` on centered data.
pub fn ridge_closed_form(cols: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let xm: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let ym = mean(y);
    let p = cols.len();
    let a = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    (0..n).map(|r| (cols[i][r] - xm[i]) * (cols[j][r] - xm[j])).sum::<f64>()
                        + if i == j { lambda } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let b = (0..p)
        .map(|i| (0..n).map(|r| (cols[i][r] - xm[i]) * (y[r] - ym)).sum())
        .collect();
    let beta = gauss_solve(a, b);
    let intercept = ym - xm.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>();
    std::iter::once(intercept).chain(beta).collect()
}

pub fn rss(cols: &[Vec<f64>], y: &[f64], coef: &[f64]) -> f64 {
    (0..y.len())
        .map(|r| {
            let fit = coef[0] + cols.iter().zip(&coef[1..]).map(|(c, b)| c[r] * b).sum::<f64>();
            (y[r] - fit).powi(2)
        })
        .sum()
}

pub fn linear_aic(cols: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let r = rss(cols, y, &normal_equations(cols, y));
    n * (r / n).ln() + 2.0 * (cols.len() + 1) as f64
}

/// Random design with per-column shift and scale and a noisy linear target.
pub fn linear_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let scale = rng.random_range(0.5..3.0);
            let shift = rng.random_range(-2.0..2.0);
            (0..n).map(|_| shift + scale * gaussian(rng)).collect()
        })
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y = (0..n)
        .map(|r| 0.5 + cols.iter().zip(&beta).map(|(c, b)| c[r] * b).sum::<f64>() + 0.5 * gaussian(rng))
        .collect();
    (cols, y)
}

pub fn matrix(cols: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureMatrix {
    let names = (0..cols.len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::new(names, cols, "y", y).unwrap()
}

/// Softmax class probabilities with the first category's predictor fixed
/// at 0; `coef[k]` is `[intercept, b...]` for category `k + 1`.
pub fn class_probabilities(coef: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0];
    for c in coef {
        eta.push(c[0] + c[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>());
    }
    let max = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// `sum_i log p(label_i | x_i)` evaluated row by row.
pub fn direct_log_likelihood(cols: &[Vec<f64>], labels: &[usize], coef: &[Vec<f64>]) -> f64 {
    (0..labels.len())
        .map(|i| {
            let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
            class_probabilities(coef, &row)[labels[i]].ln()
        })
        .sum()
}

pub fn two_pass_mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, if v.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 })
}

pub fn direct_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, sx) = two_pass_mean_sd(x);
    let (my, sy) = two_pass_mean_sd(y);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0);
    cov / (sx * sy)
}
