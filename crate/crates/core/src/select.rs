//! Forward stepwise selection by AIC.
//!
//! Starting from the intercept-only model, each round fits the current
//! features plus each remaining candidate and keeps the candidate with the
//! lowest AIC, provided it beats the current AIC by more than
//! [`AIC_SLACK`]. Ties go to the earlier candidate. A candidate whose
//! addition makes the design rank deficient (or underdetermined) is skipped
//! for that round and recorded. There are no backward steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::par::{self, ExecMode};
use crate::regress::{fit_multinomial, fit_ols, FittedModel, MultinomialOptions};

pub const AIC_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Linear,
    Multinomial(MultinomialOptions),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Multinomial(_) => "multinomial",
        }
    }

    /// Fits this family on all columns of `m`.
    pub fn fit(&self, m: &FeatureMatrix) -> Result<FittedModel> {
        match self {
            Family::Linear => fit_ols(m).map(FittedModel::Linear),
            Family::Multinomial(opts) => fit_multinomial(m, *opts).map(FittedModel::Multinomial),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub feature: String,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    /// Zero-based round in which the candidate was skipped.
    pub round: usize,
    pub feature: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepwiseTrace {
    pub family: &'static str,
    pub start_aic: f64,
    pub steps: Vec<Step>,
    pub skipped: Vec<Skipped>,
    pub final_model: FittedModel,
}

impl StepwiseTrace {
    pub fn selected(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.feature.as_str()).collect()
    }

    pub fn final_aic(&self) -> f64 {
        self.steps.last().map_or(self.start_aic, |s| s.aic)
    }
}

fn model_aic(model: &FittedModel) -> f64 {
    model.aic().unwrap_or(f64::NAN)
}

/// Runs forward stepwise selection over `candidates` (columns of `m`).
pub fn forward_stepwise<S: AsRef<str>>(
    m: &FeatureMatrix,
    family: Family,
    candidates: &[S],
    mode: ExecMode,
) -> Result<StepwiseTrace> {
    let candidates: Vec<String> = candidates.iter().map(|c| c.as_ref().to_string()).collect();
    for c in &candidates {
        if m.index_of(c).is_none() {
            return Err(Error::UnknownFeature(c.clone()));
        }
    }

    let empty: [&str; 0] = [];
    let mut current_model = family.fit(&m.select(&empty)?)?;
    let start_aic = model_aic(&current_model);
    let mut current_aic = start_aic;
    let mut selected: Vec<String> = Vec::new();
    let mut remaining = candidates;
    let mut steps = Vec::new();
    let mut skipped = Vec::new();

    let mut round = 0;
    while !remaining.is_empty() {
        let fits = par::map(mode, &remaining, |cand| {
            let mut names = selected.clone();
            names.push(cand.clone());
            m.select(&names).and_then(|sub| family.fit(&sub))
        });

        let mut best: Option<(usize, f64)> = None;
        let mut round_fits = Vec::with_capacity(fits.len());
        for (i, fit) in fits.into_iter().enumerate() {
            match fit {
                Ok(model) => {
                    let aic = model_aic(&model);
                    if !aic.is_nan() && best.is_none_or(|(_, b)| aic < b) {
                        best = Some((i, aic));
                    }
                    round_fits.push(Some(model));
                }
                Err(e @ (Error::Collinear(_) | Error::Underdetermined { .. })) => {
                    skipped.push(Skipped {
                        round,
                        feature: remaining[i].clone(),
                        reason: e.to_string(),
                    });
                    round_fits.push(None);
                }
                Err(e) => return Err(e),
            }
        }

        match best {
            Some((i, aic)) if aic < current_aic - AIC_SLACK => {
                let feature = remaining.remove(i);
                current_model = round_fits.swap_remove(i).expect("best fit exists");
                current_aic = aic;
                selected.push(feature.clone());
                steps.push(Step { feature, aic });
            }
            _ => break,
        }
        round += 1;
    }

    Ok(StepwiseTrace {
        family: family.name(),
        start_aic,
        steps,
        skipped,
        final_model: current_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: Vec<(&str, Vec<f64>)>, y: Vec<f64>) -> FeatureMatrix {
        let (names, columns): (Vec<_>, Vec<_>) = cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
        FeatureMatrix::new(names, columns, "y", y).unwrap()
    }

    #[test]
    fn empty_candidates_keep_intercept_only() {
        let m = matrix(vec![("x", vec![1.0, 2.0, 3.0, 4.0])], vec![1.0, 3.0, 2.0, 4.0]);
        let trace = forward_stepwise::<&str>(&m, Family::Linear, &[], ExecMode::Sequential).unwrap();
        assert!(trace.steps.is_empty());
        assert!(trace.final_model.features().is_empty());
        assert_eq!(trace.final_aic(), trace.start_aic);
    }

    #[test]
    fn duplicate_column_is_skipped() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + (v * 1.7).sin()).collect();
        let m = matrix(vec![("a", x.clone()), ("b", x)], y);
        let trace = forward_stepwise(&m, Family::Linear, &["a", "b"], ExecMode::Sequential).unwrap();
        assert_eq!(trace.selected(), vec!["a"]);
        assert_eq!(trace.skipped.len(), 1);
        assert_eq!(trace.skipped[0].feature, "b");
    }

    #[test]
    fn unknown_candidate_is_error() {
        let m = matrix(vec![("x", vec![1.0, 2.0, 3.0])], vec![1.0, 2.0, 4.0]);
        assert!(matches!(
            forward_stepwise(&m, Family::Linear, &["nope"], ExecMode::Sequential),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn constant_target_fails_at_intercept() {
        let m = matrix(vec![("x", vec![1.0, 2.0, 3.0])], vec![1.0, 1.0, 1.0]);
        assert!(forward_stepwise(&m, Family::Linear, &["x"], ExecMode::Sequential).is_err());
    }
}
