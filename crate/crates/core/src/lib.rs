//! Listing occupancy analytics.
//!
//! The crate scores free-text listing descriptions against the AFINN-111
//! sentiment lexicon, cleans and joins listing/occupancy tables, engineers
//! numeric listing features, and searches for the features that predict
//! occupancy rate with AIC-driven forward stepwise regression (ordinary
//! least squares or multinomial logistic).
//!
//! # Modules
//!
//! - [`lexicon`]: lexicon loading, tokenization and text scoring.
//! - [`ingest`]: delimited-file parsing, inner join and cleaning.
//! - [`features`]: derived features and design-matrix assembly.
//! - [`regress`]: OLS, ridge and multinomial logistic fits with AIC.
//! - [`select`]: forward stepwise selection for both model families.
//! - [`evaluate`]: splitting, metrics, correlations, binning and summaries.
//! - [`strata`]: zip-code price tiers and review-count strata.
//! - [`report`]: the end-to-end analysis and its artifacts.
//! - [`synthgen`]: seeded synthetic datasets with a known ground truth.
//!
//! # Parallelism
//!
//! With the default `parallel` feature, independent work (scoring listings,
//! candidate fits within a stepwise round) runs on the rayon thread pool.
//! Every parallel map preserves input order, so results are bit-identical to
//! the sequential path selected with [`ExecMode::Sequential`] or by building
//! without the feature.

pub mod error;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod lexicon;
mod linalg;
pub mod par;
pub mod regress;
pub mod report;
pub mod select;
pub mod strata;
pub mod synthgen;

pub use error::{Error, Result};
pub use par::ExecMode;
