//! The end-to-end analysis: clean, build features, split, run stepwise
//! linear and multinomial selection, evaluate on the held-out rows, then
//! repeat the linear search within price tiers, a review-count stratum and
//! for price targets.
//!
//! [`run_report`] returns the consolidated summary plus every artifact as
//! an in-memory file so callers decide where and how to write them.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::{
    accuracy, bin_occupancy, correlation_table, distribution_stats, majority_baseline, mse, split, DistributionStats,
};
use crate::features::{build_matrix, feature_value, FeatureMatrix, NUMERIC_FEATURES, OCCUPANCY_RATE};
use crate::ingest::{clean, join_occupancy, parse_listings, parse_occupancy, CleanListing, JoinedRow};
use crate::lexicon::SentimentLexicon;
use crate::par::ExecMode;
use crate::regress::{labels_from_target, predict_class, predict_linear, FittedModel, MultinomialOptions};
use crate::select::{forward_stepwise, Family, Step};
use crate::strata::{filter_by_reviews, filter_by_zip, price_tiers, PriceTier};

/// Joined input rows with counts of what was lost before cleaning.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub rows: Vec<JoinedRow>,
    /// Listing rows that failed to parse.
    pub unparsed: usize,
    /// Listings with no occupancy record.
    pub unmatched: usize,
}

impl Dataset {
    pub fn from_readers<L: Read, O: Read>(listings: L, occupancy: O, delimiter: u8) -> Result<Self> {
        let parsed = parse_listings(listings, delimiter)?;
        let occupancy = parse_occupancy(occupancy, delimiter)?;
        let joined = join_occupancy(parsed.listings, &occupancy);
        Ok(Self {
            rows: joined.rows,
            unparsed: parsed.skipped.len(),
            unmatched: joined.dropped,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub seed: u64,
    pub train_frac: f64,
    /// Occupancy classes for the multinomial model.
    pub bins: usize,
    /// Occupancy bins for the per-bin mean plots.
    pub plot_bins: usize,
    pub candidates: Vec<String>,
    /// Inclusive review-count range of the review stratum.
    pub review_range: (u32, u32),
    /// Zips modelled in addition to each tier's representative.
    pub extra_zips: Vec<String>,
    pub multinomial: MultinomialOptions,
    pub mode: ExecMode,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            seed: 1729,
            train_frac: 0.8,
            bins: 10,
            plot_bins: 20,
            candidates: NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect(),
            review_range: (30, 50),
            extra_zips: Vec::new(),
            multinomial: MultinomialOptions::default(),
            mode: ExecMode::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearSummary {
    pub selected: Vec<String>,
    pub steps: Vec<Step>,
    pub start_aic: f64,
    pub final_aic: f64,
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub r_squared: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogisticSummary {
    pub bins: usize,
    pub categories: Vec<i64>,
    pub selected: Vec<String>,
    pub steps: Vec<Step>,
    pub start_aic: f64,
    pub final_aic: f64,
    pub converged: bool,
    pub validation_accuracy: f64,
    pub baseline_accuracy: f64,
}

/// Stepwise linear result on a subset of listings; `error` is set instead
/// of the model fields when the subset cannot be modelled.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetModel {
    pub label: String,
    pub target: String,
    pub n: usize,
    pub selected: Vec<String>,
    pub final_aic: Option<f64>,
    pub r_squared: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TierSummary {
    pub global_mean_price: f64,
    pub global_sd_price: f64,
    pub zips: BTreeMap<PriceTier, Vec<String>>,
    pub models: Vec<SubsetModel>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub train_frac: f64,
    pub candidates: Vec<String>,
    pub n_input: usize,
    pub n_unparsed: usize,
    pub n_unmatched: usize,
    pub n_clean: usize,
    pub dropped: BTreeMap<String, usize>,
    pub imputed_rating: f64,
    pub ratings_imputed: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub linear: LinearSummary,
    pub logistic: LogisticSummary,
    /// Pearson correlation of each numeric feature with occupancy, keyed
    /// `feature|occupancy_rate`.
    pub correlations: BTreeMap<String, f64>,
    pub distributions: BTreeMap<String, DistributionStats>,
    pub price_tiers: TierSummary,
    pub review_stratum: SubsetModel,
    pub price_models: Vec<SubsetModel>,
}

#[derive(Debug, Clone)]
pub struct ReportOutput {
    pub report: Report,
    /// File name to contents, including `report.json`.
    pub artifacts: BTreeMap<String, String>,
}

fn subset_model(
    label: String,
    listings: &[CleanListing],
    candidates: &[String],
    target: &str,
    mode: ExecMode,
) -> SubsetModel {
    let fitted =
        build_matrix(listings, candidates, target).and_then(|m| forward_stepwise(&m, Family::Linear, candidates, mode));
    let mut out = SubsetModel {
        label,
        target: target.to_string(),
        n: listings.len(),
        selected: Vec::new(),
        final_aic: None,
        r_squared: None,
        error: None,
    };
    match fitted {
        Ok(trace) => {
            out.selected = trace.selected().iter().map(|s| s.to_string()).collect();
            out.final_aic = Some(trace.final_aic());
            if let FittedModel::Linear(m) = &trace.final_model {
                out.r_squared = Some(m.r_squared);
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

fn linear_summary(
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    candidates: &[String],
    mode: ExecMode,
) -> Result<LinearSummary> {
    let trace = forward_stepwise(train, Family::Linear, candidates, mode)?;
    let FittedModel::Linear(model) = &trace.final_model else {
        unreachable!("linear family");
    };
    let predicted = predict_linear(model, validation)?;
    Ok(LinearSummary {
        selected: trace.selected().iter().map(|s| s.to_string()).collect(),
        start_aic: trace.start_aic,
        final_aic: trace.final_aic(),
        intercept: model.intercept,
        coefficients: model
            .features
            .iter()
            .cloned()
            .zip(model.coefficients.iter().copied())
            .collect(),
        r_squared: model.r_squared,
        validation_mse: mse(&predicted, validation.y())?,
        steps: trace.steps,
    })
}

fn occupancy_bins(m: &FeatureMatrix, bins: usize) -> Result<Vec<f64>> {
    m.y()
        .iter()
        .map(|&r| bin_occupancy(r, bins).map(|b| b as f64))
        .collect()
}

fn logistic_summary(
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    config: &ReportConfig,
) -> Result<LogisticSummary> {
    let train = train.with_target("occupancy_bin", occupancy_bins(train, config.bins)?)?;
    let validation = validation.with_target("occupancy_bin", occupancy_bins(validation, config.bins)?)?;
    let trace = forward_stepwise(
        &train,
        Family::Multinomial(config.multinomial),
        &config.candidates,
        config.mode,
    )?;
    let FittedModel::Multinomial(model) = &trace.final_model else {
        unreachable!("multinomial family");
    };
    let predicted = predict_class(model, &validation)?;
    let actual = labels_from_target(validation.y())?;
    let train_labels = labels_from_target(train.y())?;
    Ok(LogisticSummary {
        bins: config.bins,
        categories: model.categories.clone(),
        selected: trace.selected().iter().map(|s| s.to_string()).collect(),
        start_aic: trace.start_aic,
        final_aic: trace.final_aic(),
        converged: model.converged,
        validation_accuracy: accuracy(&predicted, &actual)?,
        baseline_accuracy: majority_baseline(&train_labels, &actual)?,
        steps: trace.steps,
    })
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// One row per bin, `bin_low,bin_high,mean_value,count`, where `mean_value`
/// averages `values` over the rows in the bin and is empty for an empty bin.
fn plot_csv(edges: &[(f64, f64)], bins: &[usize], values: &[f64]) -> Result<String> {
    let mut acc = vec![(0.0, 0usize); edges.len()];
    for (&b, &v) in bins.iter().zip(values) {
        acc[b].0 += v;
        acc[b].1 += 1;
    }
    csv_string(
        &["bin_low", "bin_high", "mean_value", "count"],
        edges.iter().zip(acc).map(|(&(low, high), (sum, count))| {
            let mean = if count > 0 {
                (sum / count as f64).to_string()
            } else {
                String::new()
            };
            vec![low.to_string(), high.to_string(), mean, count.to_string()]
        }),
    )
}

/// Index of the left-closed bin holding `x`; values past either end go to
/// the nearest bin.
fn bin_of(edges: &[(f64, f64)], x: f64) -> usize {
    edges.partition_point(|e| e.0 <= x).saturating_sub(1)
}

fn histogram_csv(stats: &DistributionStats, values: &[f64]) -> Result<String> {
    let edges: Vec<(f64, f64)> = stats.histogram.iter().map(|b| (b.low, b.high)).collect();
    let bins: Vec<usize> = values.iter().map(|&v| bin_of(&edges, v)).collect();
    plot_csv(&edges, &bins, values)
}

/// Mean occupancy over `nbins` equal-width bins of feature `x`.
fn scatter_csv(listings: &[CleanListing], x: &str, nbins: usize) -> Result<String> {
    let xs: Vec<f64> = listings
        .iter()
        .map(|l| feature_value(l, x).expect("known feature"))
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nbins = if hi > lo { nbins } else { 1 };
    let edge = |k: usize| {
        if k == nbins {
            hi
        } else {
            lo + (hi - lo) * k as f64 / nbins as f64
        }
    };
    let edges: Vec<(f64, f64)> = (0..nbins).map(|k| (edge(k), edge(k + 1))).collect();
    let bins: Vec<usize> = xs.iter().map(|&v| bin_of(&edges, v)).collect();
    let occupancy: Vec<f64> = listings.iter().map(|l| l.occupancy_rate).collect();
    plot_csv(&edges, &bins, &occupancy)
}

/// Mean of `field` over the occupancy-rate bins.
fn bin_means_csv(listings: &[CleanListing], bins: &[usize], nbins: usize, field: &str) -> Result<String> {
    let values = listings
        .iter()
        .map(|l| feature_value(l, field).ok_or_else(|| Error::UnknownFeature(field.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let edges: Vec<(f64, f64)> = (0..nbins)
        .map(|b| (b as f64 / nbins as f64, (b + 1) as f64 / nbins as f64))
        .collect();
    plot_csv(&edges, bins, &values)
}

/// Runs the whole analysis on `data`.
pub fn run_report(data: &Dataset, lexicon: &SentimentLexicon, config: &ReportConfig) -> Result<ReportOutput> {
    if config.bins < 2 || config.plot_bins == 0 {
        return Err(Error::Domain("need at least 2 occupancy classes and 1 plot bin".into()));
    }
    for c in &config.candidates {
        if !NUMERIC_FEATURES.contains(&c.as_str()) {
            return Err(Error::UnknownFeature(c.clone()));
        }
    }
    let cleaned = clean(&data.rows, lexicon, config.mode)?;
    let listings = &cleaned.listings;

    let matrix = build_matrix(listings, &config.candidates, OCCUPANCY_RATE)?;
    let parts = split(matrix.n(), config.train_frac, config.seed)?;
    let train = matrix.take_rows(&parts.train);
    let validation = matrix.take_rows(&parts.validation);

    let linear = linear_summary(&train, &validation, &config.candidates, config.mode)?;
    let logistic = logistic_summary(&train, &validation, config)?;

    let pairs: Vec<(&str, &str)> = NUMERIC_FEATURES.iter().map(|f| (*f, OCCUPANCY_RATE)).collect();
    let correlations = correlation_table(listings, &pairs)?;

    let column = |name: &str| -> Vec<f64> {
        listings
            .iter()
            .map(|l| feature_value(l, name).expect("known feature"))
            .collect()
    };
    let mut distributions = BTreeMap::new();
    for (name, width) in [
        ("sentiment_summary", 1.0),
        ("summary_length", 5.0),
        ("price", 25.0),
        (OCCUPANCY_RATE, 0.05),
    ] {
        distributions.insert(name.to_string(), distribution_stats(&column(name), width)?);
    }

    let tiers = price_tiers(listings)?;
    let mut tier_zips: BTreeMap<PriceTier, Vec<String>> = BTreeMap::new();
    for tier in [PriceTier::Expensive, PriceTier::Average, PriceTier::Affordable] {
        tier_zips.insert(tier, tiers.zips_in(tier).iter().map(|z| z.to_string()).collect());
    }
    let mut zip_jobs: Vec<(String, String)> = [PriceTier::Expensive, PriceTier::Average, PriceTier::Affordable]
        .into_iter()
        .filter_map(|t| {
            tiers
                .representative(t)
                .map(|z| (format!("{} zip {z}", t.as_str()), z.to_string()))
        })
        .collect();
    for z in &config.extra_zips {
        zip_jobs.push((format!("zip {z}"), z.clone()));
    }
    let models = zip_jobs
        .into_iter()
        .map(|(label, zip)| {
            subset_model(
                label,
                &filter_by_zip(listings, &zip),
                &config.candidates,
                OCCUPANCY_RATE,
                config.mode,
            )
        })
        .collect();

    let (lo, hi) = config.review_range;
    let review_stratum = subset_model(
        format!("reviews {lo}-{hi}"),
        &filter_by_reviews(listings, lo, hi)?,
        &config.candidates,
        OCCUPANCY_RATE,
        config.mode,
    );

    let price_candidates: Vec<String> = config
        .candidates
        .iter()
        .filter(|c| *c != "price" && *c != "price_per_occupant")
        .cloned()
        .collect();
    let price_models = ["price", "price_per_occupant"]
        .into_iter()
        .map(|target| {
            subset_model(
                format!("target {target}"),
                listings,
                &price_candidates,
                target,
                config.mode,
            )
        })
        .collect();

    let report = Report {
        seed: config.seed,
        train_frac: config.train_frac,
        candidates: config.candidates.clone(),
        n_input: data.rows.len() + data.unparsed + data.unmatched,
        n_unparsed: data.unparsed,
        n_unmatched: data.unmatched,
        n_clean: listings.len(),
        dropped: cleaned
            .drop_counts()
            .into_iter()
            .map(|(reason, n)| (reason.as_str().to_string(), n))
            .collect(),
        imputed_rating: cleaned.imputed_rating,
        ratings_imputed: cleaned.ratings_imputed,
        n_train: parts.train.len(),
        n_validation: parts.validation.len(),
        linear,
        logistic,
        correlations,
        distributions,
        price_tiers: TierSummary {
            global_mean_price: tiers.global_mean_price,
            global_sd_price: tiers.global_sd_price,
            zips: tier_zips,
            models,
        },
        review_stratum,
        price_models,
    };

    let mut artifacts = BTreeMap::new();
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    artifacts.insert("report.json".to_string(), json);

    let mut tier_csv = Vec::new();
    tiers.write_csv(&mut tier_csv)?;
    artifacts.insert("zip_tiers.csv".into(), String::from_utf8(tier_csv).expect("UTF-8"));

    artifacts.insert(
        "sentiment_histogram.csv".into(),
        histogram_csv(&report.distributions["sentiment_summary"], &column("sentiment_summary"))?,
    );
    artifacts.insert(
        "summary_length_histogram.csv".into(),
        histogram_csv(&report.distributions["summary_length"], &column("summary_length"))?,
    );
    artifacts.insert(
        "occupancy_vs_sentiment.csv".into(),
        scatter_csv(listings, "sentiment_summary", config.plot_bins)?,
    );
    artifacts.insert(
        "reviews_vs_occupancy.csv".into(),
        scatter_csv(listings, "number_of_reviews", config.plot_bins)?,
    );
    artifacts.insert(
        "amenities_vs_occupancy.csv".into(),
        scatter_csv(listings, "num_amenities", config.plot_bins)?,
    );

    let plot_bins = listings
        .iter()
        .map(|l| bin_occupancy(l.occupancy_rate, config.plot_bins))
        .collect::<Result<Vec<_>>>()?;
    for field in ["sentiment_summary", "price", "price_per_occupant"] {
        artifacts.insert(
            format!("occupancy_bin_{field}.csv"),
            bin_means_csv(listings, &plot_bins, config.plot_bins, field)?,
        );
    }

    Ok(ReportOutput { report, artifacts })
}
