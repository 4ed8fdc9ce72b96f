//! `occupancy`: command-line front end for the listing occupancy pipeline.
//!
//! Every command reads its inputs from flags only. Artifacts are written
//! into `--output` via a temporary file and a rename, so a file is either
//! complete or absent. Failures after argument parsing print a JSON object
//! `{"error": kind, "message": text}` to standard error and exit with 1;
//! argument errors exit with 2.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use occupancy_core::evaluate::{accuracy, bin_occupancy, correlation_table, majority_baseline, mse, split, EvalReport};
use occupancy_core::features::{build_matrix, FeatureMatrix, NUMERIC_FEATURES, OCCUPANCY_RATE};
use occupancy_core::ingest::{clean, write_clean_csv, CleanOutput};
use occupancy_core::lexicon::SentimentLexicon;
use occupancy_core::regress::{
    fit_multinomial, fit_ols, fit_ridge, labels_from_target, predict_class, predict_linear, FittedModel,
    MultinomialOptions,
};
use occupancy_core::report::{run_report, Dataset, ReportConfig};
use occupancy_core::select::{forward_stepwise, Family};
use occupancy_core::strata::{filter_by_reviews, price_tiers};
use occupancy_core::synthgen::{generate, SynthSpec};
use occupancy_core::{Error, ExecMode, Result};

#[derive(Parser)]
#[command(name = "occupancy", version, about = "Listing occupancy analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the lexicon score of a text or of each line of a file.
    Score(ScoreArgs),
    /// Join, clean and write the analysis table.
    Clean(CleanArgs),
    /// Fit one model on a fixed feature set.
    Fit(FitArgs),
    /// Forward stepwise selection by AIC.
    Stepwise(StepwiseArgs),
    /// Fit on a seeded training split and score the validation rows.
    Evaluate(EvaluateArgs),
    /// Zip-code price tiers or a review-count stratum.
    Strata(StrataArgs),
    /// Generate synthetic listings and occupancy files.
    Synth(SynthArgs),
    /// Run the full analysis and write every artifact.
    Report(ReportArgs),
}

#[derive(Args)]
struct LexiconArgs {
    /// Tab-separated lexicon file; the bundled AFINN-111 list when absent.
    #[arg(long)]
    afinn: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Listings table with a header row.
    #[arg(long)]
    listings: PathBuf,
    /// Occupancy table: `host_id,occupancy_rate`.
    #[arg(long)]
    occupancy: PathBuf,
    /// Field delimiter of both input files.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for the output files; created if absent.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Linear,
    Logistic,
}

#[derive(Args)]
struct ModelArgs {
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',', default_values_t = default_features())]
    features: Vec<String>,
    /// Response column.
    #[arg(long, default_value = OCCUPANCY_RATE)]
    target: String,
    /// Model family.
    #[arg(long, value_enum, default_value = "linear")]
    family: FamilyArg,
    /// Occupancy classes for the logistic family.
    #[arg(long, default_value_t = 10)]
    bins: usize,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Text to score.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    text: Option<String>,
    /// Score every line of this file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct CleanArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Ridge penalty; `--ridge` alone uses 1.0.
    #[arg(long, num_args = 0..=1, default_missing_value = "1.0")]
    ridge: Option<f64>,
    /// Append squared columns for these features.
    #[arg(long, value_delimiter = ',')]
    quadratic: Vec<String>,
    /// Also write the design matrix as `matrix.csv`.
    #[arg(long)]
    dump_matrix: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StepwiseArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Candidate features, tried in the given order.
    #[arg(long, value_delimiter = ',', default_values_t = default_features())]
    candidates: Vec<String>,
    /// Response column.
    #[arg(long, default_value = OCCUPANCY_RATE)]
    target: String,
    /// Model family.
    #[arg(long, value_enum, default_value = "linear")]
    family: FamilyArg,
    /// Occupancy classes for the logistic family.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SplitArgs {
    /// Seed of the train/validation shuffle.
    #[arg(long, default_value_t = 1729)]
    seed: u64,
    /// Fraction of rows used for training.
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrataBy {
    ZipTier,
    Reviews,
}

#[derive(Args)]
struct StrataArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Stratify by zip-code price tier or by review count.
    #[arg(long, value_enum)]
    by: StrataBy,
    /// Lowest review count kept (inclusive).
    #[arg(long, default_value_t = 30)]
    lo: u32,
    /// Highest review count kept (inclusive).
    #[arg(long, default_value_t = 50)]
    hi: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// JSON generator spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of listings.
    #[arg(long)]
    n: Option<usize>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Candidate features, tried in the given order.
    #[arg(long, value_delimiter = ',', default_values_t = default_features())]
    candidates: Vec<String>,
    /// Occupancy classes for the logistic family.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Lowest review count kept (inclusive).
    #[arg(long, default_value_t = 30)]
    lo: u32,
    /// Highest review count kept (inclusive).
    #[arg(long, default_value_t = 50)]
    hi: u32,
    /// Extra zip codes to model (repeatable).
    #[arg(long)]
    zip: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

fn default_features() -> Vec<String> {
    NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect()
}

impl LexiconArgs {
    fn load(&self) -> Result<SentimentLexicon> {
        match &self.afinn {
            Some(path) => SentimentLexicon::load(File::open(path)?),
            None => Ok(SentimentLexicon::afinn_111()),
        }
    }
}

impl InputArgs {
    fn mode(&self) -> ExecMode {
        if self.sequential {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    }

    fn dataset(&self) -> Result<Dataset> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Domain(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        Dataset::from_readers(
            File::open(&self.listings)?,
            File::open(&self.occupancy)?,
            self.delimiter as u8,
        )
    }

    fn cleaned(&self) -> Result<CleanOutput> {
        let lexicon = self.lexicon.load()?;
        clean(&self.dataset()?.rows, &lexicon, self.mode())
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = File::create(&tmp)?;
    f.write_all(contents)?;
    f.sync_all()?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// Replaces an occupancy-rate target by its bin index for the logistic
/// family; other targets must already hold integer labels.
fn logistic_target(m: FeatureMatrix, bins: usize) -> Result<FeatureMatrix> {
    if m.target_name() != OCCUPANCY_RATE {
        labels_from_target(m.y())?;
        return Ok(m);
    }
    let y = m
        .y()
        .iter()
        .map(|&r| bin_occupancy(r, bins).map(|b| b as f64))
        .collect::<Result<Vec<_>>>()?;
    m.with_target("occupancy_bin", y)
}

fn family(arg: FamilyArg) -> Family {
    match arg {
        FamilyArg::Linear => Family::Linear,
        FamilyArg::Logistic => Family::Multinomial(MultinomialOptions::default()),
    }
}

fn score(args: &ScoreArgs) -> Result<()> {
    let lexicon = args.lexicon.load()?;
    let mut out = std::io::stdout().lock();
    if let Some(text) = &args.text {
        writeln!(out, "{}", lexicon.score_text(text))?;
    }
    if let Some(path) = &args.file {
        let text = fs::read_to_string(path)?;
        for line in text.lines() {
            writeln!(out, "{}", lexicon.score_text(line))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CleanSummary {
    n_input: usize,
    n_unparsed: usize,
    n_unmatched: usize,
    n_clean: usize,
    dropped: BTreeMap<String, usize>,
    imputed_rating: f64,
    ratings_imputed: usize,
    amenity_parse_warnings: usize,
}

fn clean_cmd(args: &CleanArgs) -> Result<()> {
    let lexicon = args.input.lexicon.load()?;
    let data = args.input.dataset()?;
    let cleaned = clean(&data.rows, &lexicon, args.input.mode())?;
    let mut csv = Vec::new();
    write_clean_csv(&cleaned.listings, &mut csv)?;
    let summary = CleanSummary {
        n_input: data.rows.len() + data.unparsed + data.unmatched,
        n_unparsed: data.unparsed,
        n_unmatched: data.unmatched,
        n_clean: cleaned.listings.len(),
        dropped: cleaned
            .drop_counts()
            .into_iter()
            .map(|(r, n)| (r.as_str().to_string(), n))
            .collect(),
        imputed_rating: cleaned.imputed_rating,
        ratings_imputed: cleaned.ratings_imputed,
        amenity_parse_warnings: cleaned.amenity_parse_warnings,
    };
    let dir = &args.output.output;
    write_atomic(dir, "clean.csv", &csv)?;
    write_json(dir, "clean_summary.json", &summary)
}

fn fit_cmd(args: &FitArgs) -> Result<()> {
    let cleaned = args.input.cleaned()?;
    let mut m = build_matrix(&cleaned.listings, &args.model.features, &args.model.target)?;
    if !args.quadratic.is_empty() {
        m = m.augment_quadratic(&args.quadratic)?;
    }
    let model = match (args.model.family, args.ridge) {
        (FamilyArg::Linear, None) => FittedModel::Linear(fit_ols(&m)?),
        (FamilyArg::Linear, Some(lambda)) => FittedModel::Linear(fit_ridge(&m, lambda)?),
        (FamilyArg::Logistic, None) => FittedModel::Multinomial(fit_multinomial(
            &logistic_target(m.clone(), args.model.bins)?,
            MultinomialOptions::default(),
        )?),
        (FamilyArg::Logistic, Some(_)) => {
            return Err(Error::Domain("--ridge applies to the linear family only".into()))
        }
    };
    let dir = &args.output.output;
    if args.dump_matrix {
        let mut csv = Vec::new();
        m.write_csv(&mut csv)?;
        write_atomic(dir, "matrix.csv", &csv)?;
    }
    write_json(dir, "model.json", &model)
}

fn stepwise_cmd(args: &StepwiseArgs) -> Result<()> {
    let cleaned = args.input.cleaned()?;
    let mut m = build_matrix(&cleaned.listings, &args.candidates, &args.target)?;
    if let FamilyArg::Logistic = args.family {
        m = logistic_target(m, args.bins)?;
    }
    let trace = forward_stepwise(&m, family(args.family), &args.candidates, args.input.mode())?;
    write_json(&args.output.output, "stepwise.json", &trace)
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let cleaned = args.input.cleaned()?;
    let listings = &cleaned.listings;
    let mut m = build_matrix(listings, &args.model.features, &args.model.target)?;
    if let FamilyArg::Logistic = args.model.family {
        m = logistic_target(m, args.model.bins)?;
    }
    let parts = split(m.n(), args.split.train_frac, args.split.seed)?;
    let train = m.take_rows(&parts.train);
    let validation = m.take_rows(&parts.validation);

    let pairs: Vec<(&str, &str)> = NUMERIC_FEATURES.iter().map(|f| (*f, OCCUPANCY_RATE)).collect();
    let mut report = EvalReport {
        mse: None,
        accuracy: None,
        baseline_accuracy: None,
        correlations: correlation_table(listings, &pairs)?,
        n_train: train.n(),
        n_validation: validation.n(),
        seed: args.split.seed,
    };
    match args.model.family {
        FamilyArg::Linear => {
            let model = fit_ols(&train)?;
            report.mse = Some(mse(&predict_linear(&model, &validation)?, validation.y())?);
        }
        FamilyArg::Logistic => {
            let model = fit_multinomial(&train, MultinomialOptions::default())?;
            let actual = labels_from_target(validation.y())?;
            report.accuracy = Some(accuracy(&predict_class(&model, &validation)?, &actual)?);
            report.baseline_accuracy = Some(majority_baseline(&labels_from_target(train.y())?, &actual)?);
        }
    }
    write_json(&args.output.output, "evaluation.json", &report)
}

#[derive(Serialize)]
struct ReviewStratum {
    lo: u32,
    hi: u32,
    n_listings: usize,
    n_total: usize,
}

fn strata_cmd(args: &StrataArgs) -> Result<()> {
    let cleaned = args.input.cleaned()?;
    let dir = &args.output.output;
    match args.by {
        StrataBy::ZipTier => {
            let table = price_tiers(&cleaned.listings)?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            write_atomic(dir, "zip_tiers.csv", &csv)?;
            write_json(dir, "zip_tiers.json", &table)
        }
        StrataBy::Reviews => {
            let kept = filter_by_reviews(&cleaned.listings, args.lo, args.hi)?;
            let mut csv = Vec::new();
            write_clean_csv(&kept, &mut csv)?;
            write_atomic(dir, "review_stratum.csv", &csv)?;
            write_json(
                dir,
                "review_stratum.json",
                &ReviewStratum {
                    lo: args.lo,
                    hi: args.hi,
                    n_listings: kept.len(),
                    n_total: cleaned.listings.len(),
                },
            )
        }
    }
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => SynthSpec::from_json(&fs::read_to_string(path)?)?,
        None => SynthSpec::default(),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = generate(&spec, &args.lexicon.load()?)?;
    let dir = &args.output.output;
    write_atomic(dir, "listings.csv", out.listings_csv.as_bytes())?;
    write_atomic(dir, "occupancy.csv", out.occupancy_csv.as_bytes())
}

fn report_cmd(args: &ReportArgs) -> Result<()> {
    let lexicon = args.input.lexicon.load()?;
    let data = args.input.dataset()?;
    let config = ReportConfig {
        seed: args.split.seed,
        train_frac: args.split.train_frac,
        bins: args.bins,
        candidates: args.candidates.clone(),
        review_range: (args.lo, args.hi),
        extra_zips: args.zip.clone(),
        mode: args.input.mode(),
        ..ReportConfig::default()
    };
    let out = run_report(&data, &lexicon, &config)?;
    for (name, contents) in &out.artifacts {
        write_atomic(&args.output.output, name, contents.as_bytes())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Score(a) => score(a),
        Command::Clean(a) => clean_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Stepwise(a) => stepwise_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Strata(a) => strata_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
