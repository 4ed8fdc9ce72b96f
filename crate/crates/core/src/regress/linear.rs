use serde::Serialize;

use super::{aligned_columns, column_names, RANK_TOLERANCE};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::PivotedQr;

#[derive(Debug, Clone, Serialize)]
pub struct FittedLinearModel {
    pub features: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub n: usize,
    pub rss: f64,
    pub tss: f64,
    pub r_squared: f64,
    /// `None` for ridge fits.
    pub aic: Option<f64>,
    /// 0 for ordinary least squares.
    pub ridge_lambda: f64,
    pub warnings: Vec<String>,
}

impl FittedLinearModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.features
            .iter()
            .position(|f| f == name)
            .map(|i| self.coefficients[i])
    }
}

/// `n ln(RSS / n) + 2 (p + 1)`; negative infinity when `rss == 0`.
pub fn aic_from_rss(n: usize, rss: f64, p: usize) -> f64 {
    let n_f = n as f64;
    if rss <= 0.0 {
        return f64::NEG_INFINITY;
    }
    n_f * (rss / n_f).ln() + 2.0 * (p as f64 + 1.0)
}

/// AIC of an ordinary least-squares fit.
pub fn aic_linear(model: &FittedLinearModel) -> Result<f64> {
    if model.ridge_lambda != 0.0 {
        return Err(Error::Model("AIC is defined for ordinary fits only".into()));
    }
    Ok(aic_from_rss(model.n, model.rss, model.features.len()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn residual_stats(m: &FeatureMatrix, intercept: f64, beta: &[f64]) -> (f64, f64) {
    let y = m.y();
    let y_mean = mean(y);
    let mut rss = 0.0;
    let mut tss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let fitted = intercept + m.columns().iter().zip(beta).map(|(c, b)| c[i] * b).sum::<f64>();
        rss += (yi - fitted).powi(2);
        tss += (yi - y_mean).powi(2);
    }
    (rss, tss)
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Ordinary least squares with an intercept, solved by pivoted QR.
pub fn fit_ols(m: &FeatureMatrix) -> Result<FittedLinearModel> {
    let (n, p) = (m.n(), m.p());
    if n < p + 1 {
        return Err(Error::Underdetermined { rows: n, params: p + 1 });
    }
    if is_constant(m.y()) {
        return Err(Error::DegenerateTarget(format!("`{}` is constant", m.target_name())));
    }

    let mut design = Vec::with_capacity(p + 1);
    design.push(vec![1.0; n]);
    design.extend(m.columns().iter().cloned());
    let qr = PivotedQr::new(design, RANK_TOLERANCE);
    let Some(solution) = qr.solve(m.y()) else {
        return Err(Error::Collinear(column_names(m, qr.deficient_columns())));
    };

    let intercept = solution[0];
    let coefficients = solution[1..].to_vec();
    let (rss, tss) = residual_stats(m, intercept, &coefficients);
    let mut warnings = Vec::new();
    if rss == 0.0 {
        warnings.push("zero residual sum of squares: AIC is -inf".to_string());
    }
    Ok(FittedLinearModel {
        features: m.names().to_vec(),
        intercept,
        coefficients,
        n,
        rss,
        tss,
        r_squared: (1.0 - rss / tss).clamp(0.0, 1.0),
        aic: Some(aic_from_rss(n, rss, p)),
        ridge_lambda: 0.0,
        warnings,
    })
}

/// Ridge regression minimizing `||y - b0 - X b||^2 + lambda ||b||^2` with
/// the intercept unpenalized.
///
/// Solved as the least-squares problem `[Xc; sqrt(lambda) I] b = [yc; 0]` on
/// column-centered data, so `lambda = 0` is ordinary least squares.
pub fn fit_ridge(m: &FeatureMatrix, lambda: f64) -> Result<FittedLinearModel> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let (n, p) = (m.n(), m.p());
    if n == 0 {
        return Err(Error::Empty("no rows".into()));
    }
    if lambda == 0.0 && n < p + 1 {
        return Err(Error::Underdetermined { rows: n, params: p + 1 });
    }

    let y_mean = mean(m.y());
    let x_means: Vec<f64> = m.columns().iter().map(|c| mean(c)).collect();
    let root = lambda.sqrt();
    let rows = n + p;
    let design: Vec<Vec<f64>> = m
        .columns()
        .iter()
        .zip(&x_means)
        .enumerate()
        .map(|(j, (c, mu))| {
            let mut col = Vec::with_capacity(rows);
            col.extend(c.iter().map(|v| v - mu));
            col.extend((0..p).map(|k| if k == j { root } else { 0.0 }));
            col
        })
        .collect();
    let mut target: Vec<f64> = m.y().iter().map(|v| v - y_mean).collect();
    target.resize(rows, 0.0);

    let coefficients = if p == 0 {
        Vec::new()
    } else {
        let qr = PivotedQr::new(design, RANK_TOLERANCE);
        match qr.solve(&target) {
            Some(b) => b,
            None => {
                let names = qr.deficient_columns().iter().map(|&j| m.names()[j].clone()).collect();
                return Err(Error::Collinear(names));
            }
        }
    };
    let intercept = y_mean - x_means.iter().zip(&coefficients).map(|(mu, b)| mu * b).sum::<f64>();

    let (rss, tss) = residual_stats(m, intercept, &coefficients);
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    };
    let aic = (lambda == 0.0).then(|| aic_from_rss(n, rss, p));
    Ok(FittedLinearModel {
        features: m.names().to_vec(),
        intercept,
        coefficients,
        n,
        rss,
        tss,
        r_squared,
        aic,
        ridge_lambda: lambda,
        warnings: Vec::new(),
    })
}

/// `intercept + X b`, with columns of `m` matched to the model by name.
pub fn predict_linear(model: &FittedLinearModel, m: &FeatureMatrix) -> Result<Vec<f64>> {
    let cols = aligned_columns(m, &model.features)?;
    Ok((0..m.n())
        .map(|i| model.intercept + cols.iter().zip(&model.coefficients).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect())
}
