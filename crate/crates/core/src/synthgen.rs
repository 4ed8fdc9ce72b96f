//! Seeded synthetic listing and occupancy tables with a known linear
//! occupancy model.
//!
//! Summaries and space descriptions are real text: sentiment words drawn
//! from the lexicon mixed with neutral filler words, so scoring runs through
//! the same tokenizer and lexicon as real data. Occupancy is computed from
//! the features exactly as cleaning will reconstruct them (absent text has
//! length and sentiment 0, absent ratings take the observed mean):
//!
//! `occupancy = clamp(intercept + sum_f coef_f * feature_f + N(0, noise_sd), 0, 1)`
//!
//! All draws come from one ChaCha8 stream seeded with `seed`.
//!
//! # Spec JSON
//!
//! Every field is optional; omitted fields take their defaults. Length and
//! sentiment parameters describe present summaries; absent ones count as 0.
//!
//! ```json
//! {
//!   "n": 1000,
//!   "seed": 1729,
//!   "intercept": 0.1,
//!   "true_coefficients": {"number_of_reviews": 0.004, "num_amenities": 0.005, "summary_length": 0.002},
//!   "noise_sd": 0.05,
//!   "missing_fraction": 0.05,
//!   "unmatched_fraction": 0.0,
//!   "distributions": {
//!     "price_mean": 137.0, "price_sd": 104.0,
//!     "summary_length_mean": 46.5, "summary_length_sd": 15.0,
//!     "space_length_mean": 60.0, "space_length_sd": 25.0,
//!     "sentiment_mean": 5.3, "sentiment_sd": 5.0,
//!     "reviews_max": 80, "amenities_min": 5, "amenities_max": 40,
//!     "rating_mean": 4.62, "rating_sd": 0.3,
//!     "zipcodes": [{"code": "10011", "weight": 1.0, "price_factor": 1.8}]
//!   }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{price_per_occupant, NUMERIC_FEATURES};
use crate::lexicon::{tokenize, SentimentLexicon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZipSpec {
    pub code: String,
    pub weight: f64,
    pub price_factor: f64,
}

impl Default for ZipSpec {
    fn default() -> Self {
        Self {
            code: "10001".into(),
            weight: 1.0,
            price_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Distributions {
    pub price_mean: f64,
    pub price_sd: f64,
    pub summary_length_mean: f64,
    pub summary_length_sd: f64,
    pub space_length_mean: f64,
    pub space_length_sd: f64,
    pub sentiment_mean: f64,
    pub sentiment_sd: f64,
    pub reviews_max: u32,
    pub amenities_min: u32,
    pub amenities_max: u32,
    pub rating_mean: f64,
    pub rating_sd: f64,
    pub zipcodes: Vec<ZipSpec>,
}

impl Default for Distributions {
    fn default() -> Self {
        let zip = |code: &str, weight: f64, price_factor: f64| ZipSpec {
            code: code.into(),
            weight,
            price_factor,
        };
        Self {
            price_mean: 137.0,
            price_sd: 104.0,
            summary_length_mean: 46.5,
            summary_length_sd: 15.0,
            space_length_mean: 60.0,
            space_length_sd: 25.0,
            sentiment_mean: 5.3,
            sentiment_sd: 5.0,
            reviews_max: 80,
            amenities_min: 5,
            amenities_max: 40,
            rating_mean: 4.62,
            rating_sd: 0.3,
            zipcodes: vec![
                zip("10011", 1.0, 1.7),
                zip("10014", 1.0, 1.5),
                zip("10003", 1.0, 1.2),
                zip("10025", 1.0, 1.0),
                zip("11211", 1.5, 1.0),
                zip("11222", 1.0, 0.9),
                zip("11225", 1.0, 0.7),
                zip("11237", 1.5, 0.5),
                zip("11226", 1.0, 0.45),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    pub intercept: f64,
    pub true_coefficients: BTreeMap<String, f64>,
    pub noise_sd: f64,
    /// Probability that a row's summary is absent, and independently that
    /// its rating is absent.
    pub missing_fraction: f64,
    /// Probability that a listing has no occupancy record.
    pub unmatched_fraction: f64,
    pub distributions: Distributions,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 1729,
            intercept: 0.1,
            true_coefficients: BTreeMap::from([
                ("num_amenities".to_string(), 0.005),
                ("number_of_reviews".to_string(), 0.004),
                ("summary_length".to_string(), 0.002),
            ]),
            noise_sd: 0.05,
            missing_fraction: 0.05,
            unmatched_fraction: 0.0,
            distributions: Distributions::default(),
        }
    }
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("synthetic n must be >= 1".into()));
        }
        for name in self.true_coefficients.keys() {
            if !NUMERIC_FEATURES.contains(&name.as_str()) {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }
        let prob = |v: f64, what: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} {v} outside [0, 1]")))
            }
        };
        prob(self.missing_fraction, "missing_fraction")?;
        prob(self.unmatched_fraction, "unmatched_fraction")?;
        let d = &self.distributions;
        let finite_non_neg = [
            self.noise_sd,
            d.price_sd,
            d.summary_length_sd,
            d.space_length_sd,
            d.sentiment_sd,
            d.rating_sd,
        ];
        if finite_non_neg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("standard deviations must be finite and >= 0".into()));
        }
        if !d.price_mean.is_finite() || d.price_mean <= 0.0 {
            return Err(Error::Domain("price_mean must be > 0".into()));
        }
        if d.amenities_min > d.amenities_max || d.amenities_max as usize > AMENITIES.len() {
            return Err(Error::Domain(format!(
                "amenity range must satisfy min <= max <= {}",
                AMENITIES.len()
            )));
        }
        if d.zipcodes.is_empty() || d.zipcodes.iter().any(|z| !(z.weight > 0.0 && z.price_factor > 0.0)) {
            return Err(Error::Domain("zipcodes need positive weights and price factors".into()));
        }
        Ok(())
    }
}

const FILLER: &[&str] = &[
    "apartment",
    "room",
    "bedroom",
    "kitchen",
    "located",
    "near",
    "subway",
    "street",
    "building",
    "floor",
    "studio",
    "manhattan",
    "brooklyn",
    "the",
    "and",
    "with",
    "to",
    "of",
    "in",
    "a",
    "is",
    "for",
    "walk",
    "minutes",
    "train",
    "space",
    "guests",
    "bathroom",
    "living",
    "block",
    "from",
    "station",
    "our",
    "my",
    "this",
    "on",
    "at",
    "queens",
    "avenue",
    "west",
    "east",
    "downtown",
    "uptown",
    "neighborhood",
    "windows",
    "sofa",
    "bed",
    "shower",
    "towels",
    "closet",
    "door",
    "stairs",
    "elevator",
    "laundry",
    "coffee",
    "shops",
    "restaurants",
];

const AMENITIES: &[&str] = &[
    "TV",
    "Wireless Internet",
    "Kitchen",
    "Heating",
    "Air conditioning",
    "Essentials",
    "Smoke detector",
    "Carbon monoxide detector",
    "Hangers",
    "Hair dryer",
    "Iron",
    "Laptop friendly workspace",
    "Shampoo",
    "Washer",
    "Dryer",
    "Elevator in building",
    "Buzzer/wireless intercom",
    "Family/kid friendly",
    "Fire extinguisher",
    "First aid kit",
    "Cable TV",
    "Internet",
    "Lock on bedroom door",
    "Safety card",
    "24-hour check-in",
    "Doorman",
    "Gym",
    "Pets allowed",
    "Free parking on premises",
    "Breakfast",
    "Pool",
    "Hot tub",
    "Indoor fireplace",
    "Wheelchair accessible",
    "Self check-in",
    "Keypad",
    "Private entrance",
    "Dishwasher",
    "Microwave",
    "Coffee maker",
    "Refrigerator",
    "Bed linens",
    "Extra pillows and blankets",
    "Patio or balcony",
    "Garden or backyard",
];

const PROPERTY_TYPES: &[(&str, f64)] = &[
    ("Apartment", 0.8),
    ("House", 0.08),
    ("Loft", 0.05),
    ("Townhouse", 0.04),
    ("Condominium", 0.03),
];

const BED_TYPES: &[(&str, f64)] = &[
    ("Real Bed", 0.9),
    ("Futon", 0.03),
    ("Pull-out Sofa", 0.04),
    ("Airbed", 0.02),
    ("Couch", 0.01),
];

fn weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], weight: impl Fn(&T) -> f64) -> &'a T {
    let total: f64 = items.iter().map(&weight).sum();
    let mut u = rng.random::<f64>() * total;
    for item in items {
        u -= weight(item);
        if u < 0.0 {
            return item;
        }
    }
    items.last().expect("non-empty")
}

/// Vocabulary drawn from a lexicon: sentiment words grouped by score plus
/// neutral filler words absent from the lexicon.
struct Vocabulary {
    /// `by_score[s + 5]` holds words with score `s`.
    by_score: Vec<Vec<String>>,
    filler: Vec<&'static str>,
}

impl Vocabulary {
    fn new(lexicon: &SentimentLexicon) -> Result<Self> {
        let mut by_score = vec![Vec::new(); 11];
        for (word, score) in lexicon.entries() {
            if score != 0 && word.chars().all(|c| c.is_ascii_lowercase()) && tokenize(word) == [word] {
                by_score[(score + 5) as usize].push(word.to_string());
            }
        }
        let filler: Vec<_> = FILLER.iter().copied().filter(|w| !lexicon.contains(w)).collect();
        if filler.is_empty() {
            return Err(Error::Domain("lexicon covers every filler word".into()));
        }
        if by_score.iter().all(Vec::is_empty) {
            return Err(Error::Domain("lexicon has no usable sentiment words".into()));
        }
        Ok(Self { by_score, filler })
    }

    fn words_with(&self, score: i32) -> &[String] {
        &self.by_score[(score + 5) as usize]
    }

    /// A `length`-word text scoring as close to `target` as the length and
    /// vocabulary allow; returns the text and its exact score.
    fn text(&self, rng: &mut ChaCha8Rng, length: usize, target: i64) -> (String, i64) {
        let mut words: Vec<&str> = Vec::with_capacity(length);
        let mut achieved = 0i64;
        while achieved != target && words.len() < length {
            let remaining = target - achieved;
            let sign = remaining.signum() as i32;
            let cap = remaining.unsigned_abs().min(3) as i32;
            let mut magnitude = rng.random_range(1..=cap);
            while magnitude > 0 && self.words_with(sign * magnitude).is_empty() {
                magnitude -= 1;
            }
            if magnitude == 0 {
                break;
            }
            let pool = self.words_with(sign * magnitude);
            words.push(&pool[rng.random_range(0..pool.len())]);
            achieved += i64::from(sign * magnitude);
        }
        while words.len() < length {
            words.push(self.filler[rng.random_range(0..self.filler.len())]);
        }
        words.shuffle(rng);

        let mut text = words.join(" ");
        if let Some(first) = text.get(..1) {
            text.replace_range(..1, &first.to_uppercase());
        }
        if !text.is_empty() {
            text.push('.');
        }
        (text, achieved)
    }
}

fn format_price(price: f64) -> String {
    let cents = (price * 100.0).round() as u64;
    let dollars = (cents / 100).to_string();
    let mut grouped = String::new();
    for (i, c) in dollars.chars().enumerate() {
        if i > 0 && (dollars.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(c);
    }
    format!("${grouped}.{:02}", cents % 100)
}

/// Feature values of one generated row, as cleaning will reconstruct them.
#[derive(Debug, Clone)]
struct Row {
    host_id: i64,
    summary: Option<String>,
    space: String,
    property_type: &'static str,
    accommodates: u32,
    bathrooms: f64,
    bedrooms: u32,
    beds: u32,
    bed_type: &'static str,
    price: f64,
    reviews: u32,
    zipcode: String,
    amenities: Vec<&'static str>,
    rating: Option<f64>,
    summary_length: u32,
    space_length: u32,
    sentiment_summary: i64,
    sentiment_space: i64,
}

impl Row {
    fn feature(&self, name: &str, imputed_rating: f64) -> f64 {
        match name {
            "accommodates" => f64::from(self.accommodates),
            "bathrooms" => self.bathrooms,
            "bedrooms" => f64::from(self.bedrooms),
            "beds" => f64::from(self.beds),
            "num_amenities" => self.amenities.len() as f64,
            "number_of_reviews" => f64::from(self.reviews),
            "price" => self.price,
            "price_per_occupant" => price_per_occupant(self.price, self.accommodates).expect("accommodates >= 1"),
            "rating" => self.rating.unwrap_or(imputed_rating),
            "sentiment_space" => self.sentiment_space as f64,
            "sentiment_summary" => self.sentiment_summary as f64,
            "space_length" => f64::from(self.space_length),
            "summary_length" => f64::from(self.summary_length),
            other => unreachable!("validated feature {other}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub listings_csv: String,
    pub occupancy_csv: String,
    /// Generated summary sentiment per listing (0 when absent).
    pub summary_sentiments: Vec<i64>,
}

impl SynthOutput {
    /// Writes `listings.csv` and `occupancy.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("listings.csv"), &self.listings_csv)?;
        std::fs::write(dir.join("occupancy.csv"), &self.occupancy_csv)?;
        Ok(())
    }
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated standard deviation")
}

/// Generates listings and occupancy tables in the ingestion formats.
pub fn generate(spec: &SynthSpec, lexicon: &SentimentLexicon) -> Result<SynthOutput> {
    spec.validate()?;
    let vocab = Vocabulary::new(lexicon)?;
    let d = &spec.distributions;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Zip price factors rescaled to a listing-weighted mean of 1.
    let total_weight: f64 = d.zipcodes.iter().map(|z| z.weight).sum();
    let mean_factor: f64 = d.zipcodes.iter().map(|z| z.weight * z.price_factor).sum::<f64>() / total_weight;

    // Within-zip log-normal sd chosen so the zip mixture has the requested
    // overall mean and sd.
    let factor_sq: f64 = d
        .zipcodes
        .iter()
        .map(|z| z.weight * (z.price_factor / mean_factor).powi(2))
        .sum::<f64>()
        / total_weight;
    let m2 = d.price_mean.powi(2);
    let within_var = ((d.price_sd.powi(2) + m2) / factor_sq - m2).max(1e-6 * m2);
    let sigma2 = (1.0 + within_var / m2).ln();
    let price_dist =
        LogNormal::new(d.price_mean.ln() - sigma2 / 2.0, sigma2.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
    let summary_len = normal(d.summary_length_mean, d.summary_length_sd);
    let space_len = normal(d.space_length_mean, d.space_length_sd);
    let sentiment = normal(d.sentiment_mean, d.sentiment_sd);
    let rating = normal(d.rating_mean, d.rating_sd);

    let mut rows = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let zip = weighted(&mut rng, &d.zipcodes, |z| z.weight);
        let accommodates = *weighted(&mut rng, &[1u32, 2, 3, 4, 5, 6], |a| match a {
            1 => 0.15,
            2 => 0.45,
            3 => 0.12,
            4 => 0.18,
            5 => 0.05,
            _ => 0.05,
        });
        let bedrooms = (accommodates / 2).max(u32::from(rng.random_bool(0.85)));
        let beds = rng.random_range(1..=accommodates.div_ceil(2).max(1));
        let bathrooms = *weighted(&mut rng, &[1.0, 1.5, 2.0], |b| if *b == 1.0 { 0.82 } else { 0.09 });
        let price = (price_dist.sample(&mut rng) * zip.price_factor / mean_factor).max(10.0);
        let price = (price * 100.0).round() / 100.0;

        let n_amenities = rng.random_range(d.amenities_min..=d.amenities_max) as usize;
        let mut amenities: Vec<&'static str> = AMENITIES.choose_multiple(&mut rng, n_amenities).copied().collect();
        amenities.sort_unstable();

        let length = summary_len.sample(&mut rng).round().clamp(1.0, 200.0) as usize;
        let target = sentiment.sample(&mut rng).round() as i64;
        let (summary_text, summary_score) = vocab.text(&mut rng, length, target);
        let space_length = space_len.sample(&mut rng).round().clamp(1.0, 250.0) as usize;
        let space_target = sentiment.sample(&mut rng).round() as i64;
        let (space, space_score) = vocab.text(&mut rng, space_length, space_target);

        let summary_missing = rng.random_bool(spec.missing_fraction);
        let rating_missing = rng.random_bool(spec.missing_fraction);
        let rating_value = (rating.sample(&mut rng).clamp(1.0, 5.0) * 100.0).round() / 100.0;

        rows.push(Row {
            host_id: 1_000_000 + i as i64,
            summary: (!summary_missing).then_some(summary_text),
            space,
            property_type: weighted(&mut rng, PROPERTY_TYPES, |p| p.1).0,
            accommodates,
            bathrooms,
            bedrooms,
            beds,
            bed_type: weighted(&mut rng, BED_TYPES, |b| b.1).0,
            price,
            reviews: rng.random_range(0..=d.reviews_max),
            zipcode: zip.code.clone(),
            amenities,
            rating: (!rating_missing).then_some(rating_value),
            summary_length: if summary_missing { 0 } else { length as u32 },
            space_length: space_length as u32,
            sentiment_summary: if summary_missing { 0 } else { summary_score },
            sentiment_space: space_score,
        });
    }

    let observed: Vec<f64> = rows.iter().filter_map(|r| r.rating).collect();
    let imputed_rating = if observed.is_empty() {
        d.rating_mean
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };

    let noise = normal(0.0, spec.noise_sd);
    let mut listings = csv::Writer::from_writer(Vec::new());
    listings.write_record([
        "host_id",
        "name",
        "summary",
        "space",
        "property_type",
        "accommodates",
        "bathrooms",
        "bedrooms",
        "beds",
        "bed_type",
        "price",
        "number_of_reviews",
        "zipcode",
        "amenities",
        "rating",
    ])?;
    let mut occupancy = csv::Writer::from_writer(Vec::new());
    occupancy.write_record(["host_id", "occupancy_rate"])?;

    for (i, row) in rows.iter().enumerate() {
        let signal: f64 = spec
            .true_coefficients
            .iter()
            .map(|(f, c)| c * row.feature(f, imputed_rating))
            .sum();
        let rate = (spec.intercept + signal + noise.sample(&mut rng)).clamp(0.0, 1.0);
        let unmatched = rng.random_bool(spec.unmatched_fraction);

        let amenities = format!(
            "{{{}}}",
            row.amenities
                .iter()
                .map(|a| if a.contains(' ') {
                    format!("\"{a}\"")
                } else {
                    a.to_string()
                })
                .collect::<Vec<_>>()
                .join(",")
        );
        listings.write_record([
            row.host_id.to_string(),
            format!("listing {}", i + 1),
            row.summary.clone().unwrap_or_else(|| "NA".into()),
            row.space.clone(),
            row.property_type.to_string(),
            row.accommodates.to_string(),
            format!("{:.1}", row.bathrooms),
            row.bedrooms.to_string(),
            row.beds.to_string(),
            row.bed_type.to_string(),
            format_price(row.price),
            row.reviews.to_string(),
            row.zipcode.clone(),
            amenities,
            row.rating.map_or_else(|| "NA".into(), |r| format!("{r:.2}")),
        ])?;
        if !unmatched {
            occupancy.write_record([row.host_id.to_string(), rate.to_string()])?;
        }
    }

    let into_string = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("generated text is UTF-8"))
    };
    Ok(SynthOutput {
        listings_csv: into_string(listings)?,
        occupancy_csv: into_string(occupancy)?,
        summary_sentiments: rows.iter().map(|r| r.sentiment_summary).collect(),
    })
}
