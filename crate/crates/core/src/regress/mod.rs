//! Model fitting: ordinary and ridge least squares, multinomial logistic
//! regression, predictions and AIC.

mod linear;
mod multinomial;

pub use linear::{aic_from_rss, aic_linear, fit_ols, fit_ridge, predict_linear, FittedLinearModel};
pub use multinomial::{
    aic_multinomial, fit_multinomial, labels_from_target, multinomial_gradient, multinomial_log_likelihood,
    predict_class, predict_proba, FittedMultinomialModel, MultinomialOptions,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Relative tolerance on `|R_kk| / ||X||_F` below which a design is
/// considered rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const INTERCEPT: &str = "(intercept)";

/// A fitted model of either family, as serialized to JSON.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FittedModel {
    Linear(FittedLinearModel),
    Multinomial(FittedMultinomialModel),
}

impl FittedModel {
    pub fn features(&self) -> &[String] {
        match self {
            FittedModel::Linear(m) => &m.features,
            FittedModel::Multinomial(m) => &m.features,
        }
    }

    pub fn aic(&self) -> Option<f64> {
        match self {
            FittedModel::Linear(m) => m.aic,
            FittedModel::Multinomial(m) => Some(m.aic),
        }
    }
}

/// Columns of `m` aligned to `names`, by name.
pub(crate) fn aligned_columns<'a>(m: &'a FeatureMatrix, names: &[String]) -> Result<Vec<&'a [f64]>> {
    names
        .iter()
        .map(|n| m.column(n).ok_or_else(|| Error::UnknownFeature(n.clone())))
        .collect()
}

/// Checks `[1, X]` for numerical rank deficiency, naming offending columns.
pub(crate) fn check_full_rank(m: &FeatureMatrix) -> Result<()> {
    let mut cols = Vec::with_capacity(m.p() + 1);
    cols.push(vec![1.0; m.n()]);
    cols.extend(m.columns().iter().cloned());
    let qr = crate::linalg::PivotedQr::new(cols, RANK_TOLERANCE);
    if qr.rank() < m.p() + 1 {
        return Err(Error::Collinear(column_names(m, qr.deficient_columns())));
    }
    Ok(())
}

fn column_names(m: &FeatureMatrix, design_indices: &[usize]) -> Vec<String> {
    design_indices
        .iter()
        .map(|&i| {
            if i == 0 {
                INTERCEPT.to_string()
            } else {
                m.names()[i - 1].clone()
            }
        })
        .collect()
}
