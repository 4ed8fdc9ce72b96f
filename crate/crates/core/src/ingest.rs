//! Listing and occupancy ingestion, inner join and cleaning.
//!
//! Cleaning rules:
//! - absent summary/space text has length 0 and sentiment 0;
//! - absent rating is imputed with the mean of the observed ratings;
//! - rows missing bathrooms, bedrooms, beds or price are dropped, as are rows
//!   with `accommodates == 0` (price per occupant is undefined there).

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{count_amenities_checked, price_per_occupant};
use crate::lexicon::SentimentLexicon;
use crate::par::{self, ExecMode};

/// Cell values treated as missing.
pub const MISSING_SENTINELS: [&str; 3] = ["NA", "N/A", ""];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawListing {
    pub host_id: i64,
    pub name: Option<String>,
    pub summary: Option<String>,
    pub space: Option<String>,
    pub property_type: String,
    pub accommodates: u32,
    pub bathrooms: Option<f64>,
    pub bedrooms: Option<u32>,
    pub beds: Option<u32>,
    pub bed_type: String,
    pub price: Option<f64>,
    pub number_of_reviews: u32,
    pub zipcode: Option<String>,
    pub amenities_raw: Option<String>,
    pub rating: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanListing {
    pub host_id: i64,
    pub name: Option<String>,
    pub summary: Option<String>,
    pub space: Option<String>,
    pub property_type: String,
    pub accommodates: u32,
    pub bathrooms: f64,
    pub bedrooms: u32,
    pub beds: u32,
    pub bed_type: String,
    pub price: f64,
    pub number_of_reviews: u32,
    /// Used only for stratification; may be absent.
    pub zipcode: Option<String>,
    pub amenities_raw: Option<String>,
    pub rating: f64,
    pub rating_imputed: bool,
    pub summary_length: u32,
    pub space_length: u32,
    pub num_amenities: u32,
    pub price_per_occupant: f64,
    pub sentiment_summary: i64,
    pub sentiment_space: i64,
    pub occupancy_rate: f64,
}

impl CleanListing {
    /// Reconstructs the joined input row this listing was cleaned from, with
    /// imputed values now present.
    pub fn to_joined(&self) -> JoinedRow {
        JoinedRow {
            listing: RawListing {
                host_id: self.host_id,
                name: self.name.clone(),
                summary: self.summary.clone(),
                space: self.space.clone(),
                property_type: self.property_type.clone(),
                accommodates: self.accommodates,
                bathrooms: Some(self.bathrooms),
                bedrooms: Some(self.bedrooms),
                beds: Some(self.beds),
                bed_type: self.bed_type.clone(),
                price: Some(self.price),
                number_of_reviews: self.number_of_reviews,
                zipcode: self.zipcode.clone(),
                amenities_raw: self.amenities_raw.clone(),
                rating: Some(self.rating),
            },
            occupancy_rate: self.occupancy_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    /// Zero-based data row index (header excluded).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedListings {
    pub listings: Vec<RawListing>,
    pub skipped: Vec<RowError>,
}

/// Column names accepted for each field, first match wins.
const COLUMN_ALIASES: &[(&str, &[&str])] = &[
    ("host_id", &["host_id"]),
    ("name", &["name"]),
    ("summary", &["summary"]),
    ("space", &["space"]),
    ("property_type", &["property_type"]),
    ("accommodates", &["accommodates"]),
    ("bathrooms", &["bathrooms"]),
    ("bedrooms", &["bedrooms"]),
    ("beds", &["beds"]),
    ("bed_type", &["bed_type"]),
    ("price", &["price", "price_in_dollars"]),
    ("number_of_reviews", &["number_of_reviews"]),
    ("zipcode", &["zipcode"]),
    ("amenities", &["amenities", "amenities_raw"]),
    ("rating", &["rating", "overall_rating"]),
];

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_SENTINELS.contains(&t)
}

fn opt_text(cell: Option<&str>) -> Option<String> {
    cell.filter(|c| !is_missing(c)).map(|c| c.trim().to_string())
}

/// Parses a dollar amount such as `$1,234.00`.
pub fn parse_price(cell: &str) -> Option<f64> {
    let cleaned: String = cell.trim().chars().filter(|&c| c != '$' && c != ',').collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_count(cell: &str) -> Option<u32> {
    let t = cell.trim();
    if let Ok(v) = t.parse::<u32>() {
        return Some(v);
    }
    let v: f64 = t.parse().ok()?;
    (v.fract() == 0.0 && v >= 0.0 && v <= f64::from(u32::MAX)).then_some(v as u32)
}

fn parse_real(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Columns(HashMap<&'static str, usize>);

impl Columns {
    fn resolve(headers: &csv::StringRecord) -> Self {
        let mut map = HashMap::new();
        for (field, aliases) in COLUMN_ALIASES {
            let found = aliases
                .iter()
                .find_map(|a| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(a)));
            if let Some(idx) = found {
                map.insert(*field, idx);
            }
        }
        Columns(map)
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, field: &str) -> Option<&'r str> {
        self.0.get(field).and_then(|&i| rec.get(i))
    }
}

fn reader<R: Read>(source: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(source)
}

/// Parses a delimited listings table with a header row.
///
/// Rows with an unparseable numeric cell are skipped and reported in
/// [`ParsedListings::skipped`]; a header without `host_id` is a schema error.
pub fn parse_listings<R: Read>(source: R, delimiter: u8) -> Result<ParsedListings> {
    let mut rdr = reader(source, delimiter);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers);
    if !cols.0.contains_key("host_id") {
        return Err(Error::Schema("missing required column `host_id`".into()));
    }

    let mut out = ParsedListings::default();
    let mut rec = csv::StringRecord::new();
    let mut row = 0;
    while rdr.read_record(&mut rec)? {
        match parse_listing_row(&cols, &rec) {
            Ok(listing) => out.listings.push(listing),
            Err(reason) => out.skipped.push(RowError { row, reason }),
        }
        row += 1;
    }
    Ok(out)
}

fn parse_listing_row(cols: &Columns, rec: &csv::StringRecord) -> std::result::Result<RawListing, String> {
    let cell = |f: &str| cols.get(rec, f);
    let present = |f: &str| cell(f).filter(|c| !is_missing(c));

    let host_id = present("host_id")
        .ok_or("missing host_id")?
        .trim()
        .parse::<i64>()
        .map_err(|_| format!("unparseable host_id `{}`", cell("host_id").unwrap_or_default()))?;

    fn opt<T>(
        v: Option<&str>,
        field: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> std::result::Result<Option<T>, String> {
        match v {
            None => Ok(None),
            Some(c) => parse(c).map(Some).ok_or_else(|| format!("unparseable {field} `{c}`")),
        }
    }
    let non_negative = |v: f64| (v >= 0.0).then_some(v);

    let accommodates = opt(present("accommodates"), "accommodates", parse_count)?.ok_or("missing accommodates")?;
    let number_of_reviews =
        opt(present("number_of_reviews"), "number_of_reviews", parse_count)?.ok_or("missing number_of_reviews")?;
    let bathrooms = opt(present("bathrooms"), "bathrooms", |c| {
        parse_real(c).and_then(non_negative)
    })?;
    let bedrooms = opt(present("bedrooms"), "bedrooms", parse_count)?;
    let beds = opt(present("beds"), "beds", parse_count)?;
    let price = opt(present("price"), "price", |c| parse_price(c).and_then(non_negative))?;
    let rating = opt(present("rating"), "rating", |c| {
        parse_real(c).filter(|v| (0.0..=5.0).contains(v))
    })?;

    Ok(RawListing {
        host_id,
        name: opt_text(cell("name")),
        summary: opt_text(cell("summary")),
        space: opt_text(cell("space")),
        property_type: opt_text(cell("property_type")).unwrap_or_default(),
        accommodates,
        bathrooms,
        bedrooms,
        beds,
        bed_type: opt_text(cell("bed_type")).unwrap_or_default(),
        price,
        number_of_reviews,
        zipcode: opt_text(cell("zipcode")),
        amenities_raw: cell("amenities").filter(|c| !is_missing(c)).map(str::to_string),
        rating,
    })
}

/// Parses a `host_id,occupancy_rate` table. Any invalid row is an error, as
/// is a repeated host id.
pub fn parse_occupancy<R: Read>(source: R, delimiter: u8) -> Result<BTreeMap<i64, f64>> {
    let mut rdr = reader(source, delimiter);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
    };
    let id_col = find("host_id")?;
    let rate_col = find("occupancy_rate")?;

    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_err = |reason: String| Error::Row { row, reason };
        let id_cell = rec.get(id_col).unwrap_or_default().trim();
        let rate_cell = rec.get(rate_col).unwrap_or_default().trim();
        let id: i64 = id_cell
            .parse()
            .map_err(|_| row_err(format!("unparseable host_id `{id_cell}`")))?;
        let rate: f64 = rate_cell
            .parse()
            .map_err(|_| row_err(format!("unparseable occupancy_rate `{rate_cell}`")))?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(row_err(format!("occupancy_rate {rate} outside [0, 1]")));
        }
        if out.insert(id, rate).is_some() {
            return Err(Error::DuplicateHost(id));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRow {
    pub listing: RawListing,
    pub occupancy_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Joined {
    pub rows: Vec<JoinedRow>,
    /// Listings with no occupancy record.
    pub dropped: usize,
}

/// Inner join on `host_id`, preserving listing order.
pub fn join_occupancy(listings: Vec<RawListing>, occupancy: &BTreeMap<i64, f64>) -> Joined {
    let mut joined = Joined::default();
    for listing in listings {
        match occupancy.get(&listing.host_id) {
            Some(&occupancy_rate) => joined.rows.push(JoinedRow {
                listing,
                occupancy_rate,
            }),
            None => joined.dropped += 1,
        }
    }
    joined
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MissingBathrooms,
    MissingBedrooms,
    MissingBeds,
    MissingPrice,
    ZeroAccommodates,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::MissingBathrooms => "missing_bathrooms",
            DropReason::MissingBedrooms => "missing_bedrooms",
            DropReason::MissingBeds => "missing_beds",
            DropReason::MissingPrice => "missing_price",
            DropReason::ZeroAccommodates => "zero_accommodates",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    /// Index into the joined rows.
    pub index: usize,
    pub host_id: i64,
    pub reason: DropReason,
}

#[derive(Debug, Clone)]
pub struct CleanOutput {
    pub listings: Vec<CleanListing>,
    pub dropped: Vec<DroppedRow>,
    /// Mean of observed ratings, used for imputation.
    pub imputed_rating: f64,
    pub ratings_imputed: usize,
    /// Amenity fields that could not be parsed and counted as 0.
    pub amenity_parse_warnings: usize,
}

impl CleanOutput {
    pub fn drop_counts(&self) -> BTreeMap<DropReason, usize> {
        let mut counts = BTreeMap::new();
        for d in &self.dropped {
            *counts.entry(d.reason).or_insert(0) += 1;
        }
        counts
    }
}

fn drop_reason(l: &RawListing) -> Option<DropReason> {
    if l.bathrooms.is_none() {
        Some(DropReason::MissingBathrooms)
    } else if l.bedrooms.is_none() {
        Some(DropReason::MissingBedrooms)
    } else if l.beds.is_none() {
        Some(DropReason::MissingBeds)
    } else if l.price.is_none() {
        Some(DropReason::MissingPrice)
    } else if l.accommodates == 0 {
        Some(DropReason::ZeroAccommodates)
    } else {
        None
    }
}

/// Applies the cleaning and imputation rules and computes the text features.
pub fn clean(rows: &[JoinedRow], lexicon: &SentimentLexicon, mode: ExecMode) -> Result<CleanOutput> {
    if rows.is_empty() {
        return Err(Error::Empty("no joined rows to clean".into()));
    }

    let mut dropped = Vec::new();
    let mut kept = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        match drop_reason(&row.listing) {
            Some(reason) => dropped.push(DroppedRow {
                index,
                host_id: row.listing.host_id,
                reason,
            }),
            None => kept.push(row),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoUsableRows);
    }

    let observed: Vec<f64> = kept.iter().filter_map(|r| r.listing.rating).collect();
    if observed.is_empty() {
        return Err(Error::Degenerate("no observed ratings to impute from".into()));
    }
    let imputed_rating = observed.iter().sum::<f64>() / observed.len() as f64;

    let built = par::map(mode, &kept, |row| {
        let l = &row.listing;
        let (num_amenities, amenity_ok) = count_amenities_checked(l.amenities_raw.as_deref());
        let price = l.price.expect("checked above");
        let text_stats = |t: Option<&str>| t.map_or((0, 0), |t| lexicon.score_and_count(t));
        let (sentiment_summary, summary_length) = text_stats(l.summary.as_deref());
        let (sentiment_space, space_length) = text_stats(l.space.as_deref());
        let listing = CleanListing {
            host_id: l.host_id,
            name: l.name.clone(),
            summary: l.summary.clone(),
            space: l.space.clone(),
            property_type: l.property_type.clone(),
            accommodates: l.accommodates,
            bathrooms: l.bathrooms.expect("checked above"),
            bedrooms: l.bedrooms.expect("checked above"),
            beds: l.beds.expect("checked above"),
            bed_type: l.bed_type.clone(),
            price,
            number_of_reviews: l.number_of_reviews,
            zipcode: l.zipcode.clone(),
            amenities_raw: l.amenities_raw.clone(),
            rating: l.rating.unwrap_or(imputed_rating),
            rating_imputed: l.rating.is_none(),
            summary_length: summary_length as u32,
            space_length: space_length as u32,
            num_amenities,
            price_per_occupant: price_per_occupant(price, l.accommodates).expect("accommodates checked above"),
            sentiment_summary,
            sentiment_space,
            occupancy_rate: row.occupancy_rate,
        };
        (listing, amenity_ok)
    });

    let amenity_parse_warnings = built.iter().filter(|(_, ok)| !ok).count();
    let listings: Vec<CleanListing> = built.into_iter().map(|(l, _)| l).collect();
    let ratings_imputed = listings.iter().filter(|l| l.rating_imputed).count();

    Ok(CleanOutput {
        listings,
        dropped,
        imputed_rating,
        ratings_imputed,
        amenity_parse_warnings,
    })
}

const CLEAN_HEADER: [&str; 23] = [
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
    "rating_imputed",
    "summary_length",
    "space_length",
    "num_amenities",
    "price_per_occupant",
    "sentiment_summary",
    "sentiment_space",
    "occupancy_rate",
];

/// Writes cleaned listings as CSV. Absent text/zip cells are written as `NA`.
pub fn write_clean_csv<W: Write>(listings: &[CleanListing], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CLEAN_HEADER)?;
    let text = |v: &Option<String>| v.clone().unwrap_or_else(|| "NA".to_string());
    for l in listings {
        w.write_record([
            l.host_id.to_string(),
            text(&l.name),
            text(&l.summary),
            text(&l.space),
            l.property_type.clone(),
            l.accommodates.to_string(),
            l.bathrooms.to_string(),
            l.bedrooms.to_string(),
            l.beds.to_string(),
            l.bed_type.clone(),
            l.price.to_string(),
            l.number_of_reviews.to_string(),
            text(&l.zipcode),
            text(&l.amenities_raw),
            l.rating.to_string(),
            l.rating_imputed.to_string(),
            l.summary_length.to_string(),
            l.space_length.to_string(),
            l.num_amenities.to_string(),
            l.price_per_occupant.to_string(),
            l.sentiment_summary.to_string(),
            l.sentiment_space.to_string(),
            l.occupancy_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
