//! Derived listing features and design-matrix assembly.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::CleanListing;
use crate::lexicon::token_count;

/// Default stepwise candidates, in alphabetical order (the order used to
/// break AIC ties).
pub const NUMERIC_FEATURES: [&str; 13] = [
    "accommodates",
    "bathrooms",
    "bedrooms",
    "beds",
    "num_amenities",
    "number_of_reviews",
    "price",
    "price_per_occupant",
    "rating",
    "sentiment_space",
    "sentiment_summary",
    "space_length",
    "summary_length",
];

pub const OCCUPANCY_RATE: &str = "occupancy_rate";

/// Categorical fields that can be one-hot encoded.
pub const CATEGORICAL_FEATURES: [&str; 3] = ["bed_type", "property_type", "zipcode"];

pub fn word_count(text: Option<&str>) -> u32 {
    text.map_or(0, |t| token_count(t) as u32)
}

/// Number of items in a brace-delimited amenity list such as
/// `{TV,"Wireless Internet",Kitchen}`. Missing or unparseable fields count 0.
pub fn count_amenities(raw: Option<&str>) -> u32 {
    count_amenities_checked(raw).0
}

/// Like [`count_amenities`], also reporting whether the field parsed.
pub fn count_amenities_checked(raw: Option<&str>) -> (u32, bool) {
    let Some(raw) = raw else { return (0, true) };
    let t = raw.trim();
    if t.is_empty() {
        return (0, true);
    }
    let Some(inner) = t.strip_prefix('{').and_then(|s| s.strip_suffix('}')) else {
        return (0, false);
    };

    let mut count = 0;
    let mut in_quotes = false;
    let mut item_has_content = false;
    for c in inner.chars() {
        match c {
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => {
                count += u32::from(item_has_content);
                item_has_content = false;
            }
            c if !c.is_whitespace() => item_has_content = true,
            _ => {}
        }
    }
    if in_quotes {
        return (0, false);
    }
    count += u32::from(item_has_content);
    (count, true)
}

pub fn price_per_occupant(price: f64, accommodates: u32) -> Result<f64> {
    if accommodates == 0 {
        return Err(Error::Domain("price per occupant needs accommodates >= 1".into()));
    }
    if price < 0.0 {
        return Err(Error::Domain(format!("negative price {price}")));
    }
    Ok(price / f64::from(accommodates))
}

/// Numeric value of a named feature (or the occupancy target) for a listing.
pub fn feature_value(l: &CleanListing, name: &str) -> Option<f64> {
    Some(match name {
        "accommodates" => f64::from(l.accommodates),
        "bathrooms" => l.bathrooms,
        "bedrooms" => f64::from(l.bedrooms),
        "beds" => f64::from(l.beds),
        "num_amenities" => f64::from(l.num_amenities),
        "number_of_reviews" => f64::from(l.number_of_reviews),
        "price" => l.price,
        "price_per_occupant" => l.price_per_occupant,
        "rating" => l.rating,
        "sentiment_space" => l.sentiment_space as f64,
        "sentiment_summary" => l.sentiment_summary as f64,
        "space_length" => f64::from(l.space_length),
        "summary_length" => f64::from(l.summary_length),
        OCCUPANCY_RATE => l.occupancy_rate,
        _ => return None,
    })
}

fn category_value<'a>(l: &'a CleanListing, name: &str) -> Option<&'a str> {
    match name {
        "bed_type" => Some(&l.bed_type),
        "property_type" => Some(&l.property_type),
        "zipcode" => Some(l.zipcode.as_deref().unwrap_or("NA")),
        _ => None,
    }
}

/// Column-major design matrix with a named target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    target_name: String,
    y: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from named columns. Every column must have `y.len()`
    /// finite entries and names must be unique.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        target_name: impl Into<String>,
        y: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: columns.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != y.len() {
                return Err(Error::LengthMismatch {
                    left: col.len(),
                    right: y.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("non-finite value in column `{name}`")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite value in target".into()));
        }
        Ok(Self {
            names,
            columns,
            target_name: target_name.into(),
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    /// Matrix restricted to the named columns, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let mut cols = Vec::with_capacity(names.len());
        let mut out_names = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let idx = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
            cols.push(self.columns[idx].clone());
            out_names.push(name.to_string());
        }
        FeatureMatrix::new(out_names, cols, self.target_name.clone(), self.y.clone())
    }

    /// Rows at `indices`, in the given order.
    pub fn take_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        FeatureMatrix {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| pick(c)).collect(),
            target_name: self.target_name.clone(),
            y: pick(&self.y),
        }
    }

    /// Same design with a replacement target.
    pub fn with_target(&self, target_name: impl Into<String>, y: Vec<f64>) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.names.clone(), self.columns.clone(), target_name, y)
    }

    /// Appends `name^2` columns for each named feature. Existing columns are
    /// untouched.
    pub fn augment_quadratic<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let mut out = self.clone();
        for name in names {
            let name = name.as_ref();
            let col = self
                .column(name)
                .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
            let squared_name = format!("{name}^2");
            if out.index_of(&squared_name).is_some() {
                return Err(Error::DuplicateColumn(squared_name));
            }
            let squared: Vec<f64> = col.iter().map(|v| v * v).collect();
            if squared.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("overflow squaring `{name}`")));
            }
            out.names.push(squared_name);
            out.columns.push(squared);
        }
        Ok(out)
    }

    /// CSV with one column per feature followed by the target.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push(&self.target_name);
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            rec.push(self.y[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Assembles the numeric design matrix for `features` and the `target`
/// column, rows in listing order.
pub fn build_matrix<S: AsRef<str>>(listings: &[CleanListing], features: &[S], target: &str) -> Result<FeatureMatrix> {
    build_matrix_one_hot(listings, features, &[] as &[&str], target)
}

/// Like [`build_matrix`], appending one-hot indicator columns
/// (`field=level`) for each categorical field. The alphabetically first level
/// of each field is the omitted baseline.
pub fn build_matrix_one_hot<S: AsRef<str>, C: AsRef<str>>(
    listings: &[CleanListing],
    features: &[S],
    categoricals: &[C],
    target: &str,
) -> Result<FeatureMatrix> {
    if listings.is_empty() {
        return Err(Error::Empty("no listings to build a matrix from".into()));
    }
    let lookup =
        |l: &CleanListing, name: &str| feature_value(l, name).ok_or_else(|| Error::UnknownFeature(name.to_string()));

    let y = listings.iter().map(|l| lookup(l, target)).collect::<Result<Vec<_>>>()?;

    let mut names = Vec::new();
    let mut columns = Vec::new();
    for f in features {
        let f = f.as_ref();
        let col = listings.iter().map(|l| lookup(l, f)).collect::<Result<Vec<_>>>()?;
        names.push(f.to_string());
        columns.push(col);
    }

    for field in categoricals {
        let field = field.as_ref();
        if category_value(&listings[0], field).is_none() {
            return Err(Error::UnknownFeature(field.to_string()));
        }
        let levels: BTreeSet<&str> = listings.iter().filter_map(|l| category_value(l, field)).collect();
        for level in levels.into_iter().skip(1) {
            names.push(format!("{field}={level}"));
            columns.push(
                listings
                    .iter()
                    .map(|l| f64::from(u8::from(category_value(l, field) == Some(level))))
                    .collect(),
            );
        }
    }

    FeatureMatrix::new(names, columns, target, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{clean, JoinedRow, RawListing};
    use crate::lexicon::SentimentLexicon;
    use crate::ExecMode;

    fn listings() -> Vec<CleanListing> {
        let lex = SentimentLexicon::afinn_111();
        let mk = |id: i64, price: f64, beds: u32, ptype: &str| JoinedRow {
            listing: RawListing {
                host_id: id,
                name: None,
                summary: Some("perfect studio for couples".into()),
                space: None,
                property_type: ptype.into(),
                accommodates: 2,
                bathrooms: Some(1.0),
                bedrooms: Some(1),
                beds: Some(beds),
                bed_type: "Real Bed".into(),
                price: Some(price),
                number_of_reviews: 5,
                zipcode: Some("11211".into()),
                amenities_raw: None,
                rating: Some(4.5),
            },
            occupancy_rate: 0.25 * id as f64,
        };
        clean(
            &[mk(1, 80.0, 1, "House"), mk(2, 120.0, 2, "Apartment")],
            &lex,
            ExecMode::Sequential,
        )
        .unwrap()
        .listings
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count(Some("perfect studio for couples")), 4);
        assert_eq!(word_count(None), 0);
        assert_eq!(word_count(Some("  ")), 0);
    }

    #[test]
    fn amenity_counts() {
        assert_eq!(count_amenities(Some(r#"{TV,"Wireless Internet",Kitchen}"#)), 3);
        assert_eq!(count_amenities(Some("{}")), 0);
        assert_eq!(count_amenities(None), 0);
        assert_eq!(count_amenities(Some(r#"{"a, b",c}"#)), 2);
        assert_eq!(count_amenities_checked(Some("TV,Kitchen")), (0, false));
        assert_eq!(count_amenities_checked(Some(r#"{"TV}"#)), (0, false));
        assert_eq!(count_amenities(Some("{TV,,Kitchen}")), 2);
    }

    #[test]
    fn price_per_occupant_examples() {
        assert_eq!(price_per_occupant(100.0, 4).unwrap(), 25.0);
        assert_eq!(price_per_occupant(75.0, 1).unwrap(), 75.0);
        assert!(matches!(price_per_occupant(100.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn build_matrix_shape_and_order() {
        let ls = listings();
        let m = build_matrix(&ls, &["price", "beds"], OCCUPANCY_RATE).unwrap();
        assert_eq!((m.n(), m.p()), (2, 2));
        assert_eq!(m.column("price").unwrap(), &[80.0, 120.0]);
        assert_eq!(m.y(), &[0.25, 0.5]);

        assert!(matches!(
            build_matrix(&ls, &["color"], OCCUPANCY_RATE),
            Err(Error::UnknownFeature(_))
        ));
        assert!(matches!(
            build_matrix(&[], &["price"], OCCUPANCY_RATE),
            Err(Error::Empty(_))
        ));

        let pm = build_matrix(&ls, &["accommodates", OCCUPANCY_RATE], "price").unwrap();
        assert_eq!(pm.y(), &[80.0, 120.0]);
    }

    #[test]
    fn one_hot_drops_baseline_level() {
        let ls = listings();
        let m = build_matrix_one_hot(&ls, &["price"], &["property_type"], OCCUPANCY_RATE).unwrap();
        assert_eq!(m.names(), &["price".to_string(), "property_type=House".to_string()]);
        assert_eq!(m.column("property_type=House").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn quadratic_augmentation() {
        let m = FeatureMatrix::new(
            vec!["x".into(), "c".into()],
            vec![vec![1.0, 2.0, 3.0], vec![2.0, 2.0, 2.0]],
            "y",
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let a = m.augment_quadratic(&["x", "c"]).unwrap();
        assert_eq!(a.column("x^2").unwrap(), &[1.0, 4.0, 9.0]);
        assert_eq!(a.column("c^2").unwrap(), &[4.0, 4.0, 4.0]);
        assert_eq!(&a.columns()[..2], m.columns());
        assert_eq!(m.augment_quadratic::<&str>(&[]).unwrap(), m);
        assert!(matches!(a.augment_quadratic(&["x"]), Err(Error::DuplicateColumn(_))));
    }

    #[test]
    fn matrix_rejects_bad_input() {
        assert!(FeatureMatrix::new(vec!["a".into()], vec![vec![f64::NAN]], "y", vec![1.0]).is_err());
        assert!(FeatureMatrix::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]], "y", vec![1.0]).is_err());
    }
}
