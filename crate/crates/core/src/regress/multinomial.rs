//! Multinomial logistic regression with a reference category.
//!
//! For categories `c_0 < c_1 < ... < c_{K-1}` the linear predictor of `c_0`
//! is fixed at 0 and class `c_k` (k >= 1) has `eta_k = b_k0 + sum_j b_kj x_j`.
//! Fitting maximizes the log-likelihood by damped Newton iterations on
//! internally standardized features; coefficients are reported on the
//! original feature scale.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{aligned_columns, check_full_rank};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{cholesky, cholesky_solve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultinomialOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the mean log-likelihood
    /// gradient with respect to the standardized parameters.
    pub tol: f64,
}

impl Default for MultinomialOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FittedMultinomialModel {
    pub features: Vec<String>,
    /// Ordered category labels; the first is the reference.
    pub categories: Vec<i64>,
    /// One row per non-reference category: `[intercept, b_1, ..., b_p]`.
    pub coefficients: Vec<Vec<f64>>,
    pub n: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub warnings: Vec<String>,
}

impl FittedMultinomialModel {
    pub fn reference(&self) -> i64 {
        self.categories[0]
    }
}

/// Converts an integer-valued target into labels.
pub fn labels_from_target(y: &[f64]) -> Result<Vec<i64>> {
    y.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.fract() == 0.0 && v.abs() < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(Error::Row {
                    row: i,
                    reason: format!("category label {v} is not an integer"),
                })
            }
        })
        .collect()
}

fn label_indices(labels: &[i64], categories: &[i64]) -> Result<Vec<usize>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            categories.binary_search(l).map_err(|_| Error::Row {
                row: i,
                reason: format!("label {l} is not a model category"),
            })
        })
        .collect()
}

/// Class probabilities for one row given its non-reference linear predictors.
fn softmax_with_reference(eta: &[f64], probs: &mut [f64]) {
    let max = eta.iter().copied().fold(0.0_f64, f64::max);
    let mut total = (-max).exp();
    probs[0] = total;
    for (p, e) in probs[1..].iter_mut().zip(eta) {
        *p = (e - max).exp();
        total += *p;
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
}

/// Log of the class-`k` probability, computed stably.
fn log_prob(eta: &[f64], k: usize) -> f64 {
    let max = eta.iter().copied().fold(0.0_f64, f64::max);
    let lse = max + ((-max).exp() + eta.iter().map(|e| (e - max).exp()).sum::<f64>()).ln();
    let own = if k == 0 { 0.0 } else { eta[k - 1] };
    own - lse
}

fn linear_predictors(cols: &[&[f64]], coef: &[Vec<f64>], i: usize, eta: &mut [f64]) {
    for (e, row) in eta.iter_mut().zip(coef) {
        *e = row[0] + cols.iter().zip(&row[1..]).map(|(c, b)| c[i] * b).sum::<f64>();
    }
}

fn check_coefficients(coef: &[Vec<f64>], k: usize, q: usize) -> Result<()> {
    if coef.len() != k - 1 || coef.iter().any(|r| r.len() != q) {
        return Err(Error::Model(format!("coefficient matrix must be {} x {}", k - 1, q)));
    }
    Ok(())
}

/// Log-likelihood `sum_i log p(y_i | x_i)` of integer labels in `m.y()`
/// under `coefficients`, with all columns of `m` as features.
pub fn multinomial_log_likelihood(m: &FeatureMatrix, categories: &[i64], coefficients: &[Vec<f64>]) -> Result<f64> {
    check_coefficients(coefficients, categories.len(), m.p() + 1)?;
    let idx = label_indices(&labels_from_target(m.y())?, categories)?;
    let cols: Vec<&[f64]> = m.columns().iter().map(Vec::as_slice).collect();
    let mut eta = vec![0.0; categories.len() - 1];
    Ok((0..m.n())
        .map(|i| {
            linear_predictors(&cols, coefficients, i, &mut eta);
            log_prob(&eta, idx[i])
        })
        .sum())
}

/// Analytic gradient of [`multinomial_log_likelihood`], same shape as the
/// coefficient matrix.
pub fn multinomial_gradient(m: &FeatureMatrix, categories: &[i64], coefficients: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = categories.len();
    let q = m.p() + 1;
    check_coefficients(coefficients, k, q)?;
    let idx = label_indices(&labels_from_target(m.y())?, categories)?;
    let cols: Vec<&[f64]> = m.columns().iter().map(Vec::as_slice).collect();
    let mut grad = vec![vec![0.0; q]; k - 1];
    let mut eta = vec![0.0; k - 1];
    let mut probs = vec![0.0; k];
    for i in 0..m.n() {
        linear_predictors(&cols, coefficients, i, &mut eta);
        softmax_with_reference(&eta, &mut probs);
        for a in 1..k {
            let resid = f64::from(u8::from(idx[i] == a)) - probs[a];
            let g = &mut grad[a - 1];
            g[0] += resid;
            for (gj, c) in g[1..].iter_mut().zip(&cols) {
                *gj += resid * c[i];
            }
        }
    }
    Ok(grad)
}

/// Row-major standardized design with a leading column of ones.
struct Standardized {
    n: usize,
    q: usize,
    rows: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl Standardized {
    fn new(m: &FeatureMatrix) -> Result<Self> {
        let (n, p) = (m.n(), m.p());
        let q = p + 1;
        let mut means = Vec::with_capacity(p);
        let mut sds = Vec::with_capacity(p);
        for (name, col) in m.names().iter().zip(m.columns()) {
            let mu = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
            if var.is_nan() || var <= 0.0 {
                return Err(Error::Collinear(vec![name.clone()]));
            }
            means.push(mu);
            sds.push(var.sqrt());
        }
        let mut rows = vec![0.0; n * q];
        for i in 0..n {
            rows[i * q] = 1.0;
            for j in 0..p {
                rows[i * q + 1 + j] = (m.columns()[j][i] - means[j]) / sds[j];
            }
        }
        Ok(Self { n, q, rows, means, sds })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.q..(i + 1) * self.q]
    }

    /// Original-scale coefficients for standardized parameters `theta`.
    fn to_original(&self, theta: &[f64], k1: usize) -> Vec<Vec<f64>> {
        let q = self.q;
        (0..k1)
            .map(|a| {
                let t = &theta[a * q..(a + 1) * q];
                let mut row = vec![0.0; q];
                let mut intercept = t[0];
                for j in 0..q - 1 {
                    row[1 + j] = t[1 + j] / self.sds[j];
                    intercept -= t[1 + j] * self.means[j] / self.sds[j];
                }
                row[0] = intercept;
                row
            })
            .collect()
    }
}

struct Evaluation {
    /// Mean log-likelihood.
    ll: f64,
    /// Gradient of the mean log-likelihood.
    grad: Vec<f64>,
}

struct Problem<'a> {
    x: &'a Standardized,
    idx: &'a [usize],
    k: usize,
}

impl Problem<'_> {
    fn eta(&self, theta: &[f64], i: usize, eta: &mut [f64]) {
        let q = self.x.q;
        let row = self.x.row(i);
        for (a, e) in eta.iter_mut().enumerate() {
            *e = theta[a * q..(a + 1) * q].iter().zip(row).map(|(t, z)| t * z).sum();
        }
    }

    fn mean_ll(&self, theta: &[f64]) -> f64 {
        let mut eta = vec![0.0; self.k - 1];
        let total: f64 = (0..self.x.n)
            .map(|i| {
                self.eta(theta, i, &mut eta);
                log_prob(&eta, self.idx[i])
            })
            .sum();
        total / self.x.n as f64
    }

    fn evaluate(&self, theta: &[f64]) -> Evaluation {
        let (q, k1) = (self.x.q, self.k - 1);
        let mut grad = vec![0.0; k1 * q];
        let mut eta = vec![0.0; k1];
        let mut probs = vec![0.0; self.k];
        let mut ll = 0.0;
        for i in 0..self.x.n {
            self.eta(theta, i, &mut eta);
            ll += log_prob(&eta, self.idx[i]);
            softmax_with_reference(&eta, &mut probs);
            let row = self.x.row(i);
            for a in 0..k1 {
                let resid = f64::from(u8::from(self.idx[i] == a + 1)) - probs[a + 1];
                for (g, z) in grad[a * q..(a + 1) * q].iter_mut().zip(row) {
                    *g += resid * z;
                }
            }
        }
        let inv_n = 1.0 / self.x.n as f64;
        grad.iter_mut().for_each(|g| *g *= inv_n);
        Evaluation { ll: ll * inv_n, grad }
    }

    /// Negative Hessian of the mean log-likelihood, row-major.
    fn information(&self, theta: &[f64]) -> Vec<f64> {
        let (q, k1) = (self.x.q, self.k - 1);
        let dim = k1 * q;
        let tri = q * (q + 1) / 2;
        let pairs = k1 * (k1 + 1) / 2;
        // acc[pair][upper-tri of z z^T]
        let mut acc = vec![0.0; pairs * tri];
        let mut outer = vec![0.0; tri];
        let mut weights = vec![0.0; pairs];
        let mut eta = vec![0.0; k1];
        let mut probs = vec![0.0; self.k];

        for i in 0..self.x.n {
            self.eta(theta, i, &mut eta);
            softmax_with_reference(&eta, &mut probs);
            let row = self.x.row(i);
            let mut t = 0;
            for j in 0..q {
                for l in j..q {
                    outer[t] = row[j] * row[l];
                    t += 1;
                }
            }
            let mut pi = 0;
            for a in 0..k1 {
                let pa = probs[a + 1];
                weights[pi] = pa * (1.0 - pa);
                pi += 1;
                for b in a + 1..k1 {
                    weights[pi] = -pa * probs[b + 1];
                    pi += 1;
                }
            }
            for (block, &w) in acc.chunks_exact_mut(tri).zip(&weights) {
                for (s, o) in block.iter_mut().zip(&outer) {
                    *s += w * o;
                }
            }
        }

        let inv_n = 1.0 / self.x.n as f64;
        let mut info = vec![0.0; dim * dim];
        let mut pi = 0;
        for a in 0..k1 {
            for b in a..k1 {
                let block = &acc[pi * tri..(pi + 1) * tri];
                let mut t = 0;
                for j in 0..q {
                    for l in j..q {
                        let v = block[t] * inv_n;
                        t += 1;
                        let (r1, c1) = (a * q + j, b * q + l);
                        let (r2, c2) = (a * q + l, b * q + j);
                        info[r1 * dim + c1] = v;
                        info[c1 * dim + r1] = v;
                        info[r2 * dim + c2] = v;
                        info[c2 * dim + r2] = v;
                    }
                }
                pi += 1;
            }
        }
        info
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits a multinomial logistic model of the integer labels in `m.y()` on
/// all columns of `m`.
///
/// Divergence (perfect separation, non-finite likelihood) is not an error:
/// the fit stops with `converged == false` and a warning.
pub fn fit_multinomial(m: &FeatureMatrix, opts: MultinomialOptions) -> Result<FittedMultinomialModel> {
    let n = m.n();
    if n == 0 {
        return Err(Error::Empty("no rows".into()));
    }
    let labels = labels_from_target(m.y())?;
    let categories: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if categories.len() < 2 {
        return Err(Error::DegenerateTarget(
            "multinomial fit needs at least two classes".into(),
        ));
    }
    check_full_rank(m)?;

    let k = categories.len();
    let k1 = k - 1;
    let idx = label_indices(&labels, &categories)?;
    let x = Standardized::new(m)?;
    let q = x.q;
    let dim = k1 * q;
    let problem = Problem { x: &x, idx: &idx, k };

    // Start from the intercept-only maximum: log class-frequency ratios.
    let mut counts = vec![0usize; k];
    for &c in &idx {
        counts[c] += 1;
    }
    let mut theta = vec![0.0; dim];
    for a in 0..k1 {
        theta[a * q] = (counts[a + 1] as f64 / counts[0] as f64).ln();
    }

    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut eval = problem.evaluate(&theta);

    while iterations < opts.max_iter {
        if !eval.ll.is_finite() || eval.grad.iter().any(|g| !g.is_finite()) {
            warnings.push("non-finite log-likelihood; stopping".to_string());
            break;
        }
        if max_abs(&eval.grad) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut info = problem.information(&theta);
        let scale = (0..dim).map(|i| info[i * dim + i]).fold(0.0, f64::max).max(1e-300);
        let mut damping = 0.0;
        let chol = loop {
            if let Some(l) = cholesky(&info, dim) {
                break Some(l);
            }
            let next = if damping == 0.0 { 1e-12 * scale } else { damping * 10.0 };
            for i in 0..dim {
                info[i * dim + i] += next - damping;
            }
            damping = next;
            if damping > 1e6 * scale {
                break None;
            }
        };
        let Some(chol) = chol else {
            warnings.push("information matrix is singular; stopping".to_string());
            break;
        };
        let direction = cholesky_solve(&chol, dim, &eval.grad);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
            let ll = problem.mean_ll(&trial);
            if ll.is_finite() && ll >= eval.ll {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            warnings.push("line search made no progress; stopping".to_string());
            break;
        };
        theta = next;
        eval = problem.evaluate(&theta);
    }
    if !converged && iterations >= opts.max_iter {
        warnings.push(format!("did not converge in {} iterations", opts.max_iter));
    }

    let coefficients = x.to_original(&theta, k1);
    let log_likelihood = multinomial_log_likelihood(m, &categories, &coefficients)?;
    if log_likelihood > -1e-6 * n as f64 {
        warnings.push("near-perfect separation: coefficients may be unbounded".to_string());
    }
    let aic = aic_multinomial_raw(k, m.p(), log_likelihood);
    Ok(FittedMultinomialModel {
        features: m.names().to_vec(),
        categories,
        coefficients,
        n,
        log_likelihood,
        aic,
        converged,
        iterations,
        gradient_max_norm: max_abs(&eval.grad),
        warnings,
    })
}

fn aic_multinomial_raw(k: usize, p: usize, log_likelihood: f64) -> f64 {
    2.0 * ((k - 1) * (p + 1)) as f64 - 2.0 * log_likelihood
}

/// `2 (K - 1)(p + 1) - 2 logL`.
pub fn aic_multinomial(model: &FittedMultinomialModel) -> f64 {
    aic_multinomial_raw(model.categories.len(), model.features.len(), model.log_likelihood)
}

/// Class probabilities per row, in category order.
pub fn predict_proba(model: &FittedMultinomialModel, m: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    let cols = aligned_columns(m, &model.features)?;
    let k = model.categories.len();
    let mut eta = vec![0.0; k - 1];
    Ok((0..m.n())
        .map(|i| {
            linear_predictors(&cols, &model.coefficients, i, &mut eta);
            let mut probs = vec![0.0; k];
            softmax_with_reference(&eta, &mut probs);
            probs
        })
        .collect())
}

/// Most probable category per row; ties go to the earlier category.
pub fn predict_class(model: &FittedMultinomialModel, m: &FeatureMatrix) -> Result<Vec<i64>> {
    Ok(predict_proba(model, m)?
        .iter()
        .map(|probs| {
            let mut best = 0;
            for (c, &p) in probs.iter().enumerate().skip(1) {
                if p > probs[best] {
                    best = c;
                }
            }
            model.categories[best]
        })
        .collect())
}
