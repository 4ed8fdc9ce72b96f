//! Zip-code price tiers and review-count strata.
//!
//! A zip code is `expensive` when its mean listing price exceeds the global
//! mean price by more than half a global standard deviation, `affordable`
//! when it falls short by more than half, and `average` otherwise. The
//! global statistics are taken over individual listing prices.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluate::mean_sd;
use crate::ingest::CleanListing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceTier {
    Expensive,
    Average,
    Affordable,
}

impl PriceTier {
    pub fn as_str(self) -> &'static str {
        match self {
            PriceTier::Expensive => "expensive",
            PriceTier::Average => "average",
            PriceTier::Affordable => "affordable",
        }
    }
}

/// Strict ±½σ band; equality with a threshold is `Average`.
pub fn classify_tier(zip_mean: f64, global_mean: f64, global_sd: f64) -> PriceTier {
    let half = 0.5 * global_sd;
    if zip_mean > global_mean + half {
        PriceTier::Expensive
    } else if zip_mean < global_mean - half {
        PriceTier::Affordable
    } else {
        PriceTier::Average
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZipStats {
    pub mean_price: f64,
    pub n_listings: usize,
    pub tier: PriceTier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZipTierTable {
    pub global_mean_price: f64,
    pub global_sd_price: f64,
    pub zips: BTreeMap<String, ZipStats>,
}

impl ZipTierTable {
    pub fn tier(&self, zip: &str) -> Option<PriceTier> {
        self.zips.get(zip).map(|z| z.tier)
    }

    pub fn zips_in(&self, tier: PriceTier) -> Vec<&str> {
        self.zips
            .iter()
            .filter(|(_, s)| s.tier == tier)
            .map(|(z, _)| z.as_str())
            .collect()
    }

    /// The zip with the most listings in `tier` (ties to the smaller code).
    pub fn representative(&self, tier: PriceTier) -> Option<&str> {
        let mut best: Option<(&str, usize)> = None;
        for (zip, s) in &self.zips {
            if s.tier == tier && best.is_none_or(|(_, n)| s.n_listings > n) {
                best = Some((zip, s.n_listings));
            }
        }
        best.map(|(z, _)| z)
    }

    /// CSV rows `zipcode,mean_price,tier,n_listings`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["zipcode", "mean_price", "tier", "n_listings"])?;
        for (zip, s) in &self.zips {
            w.write_record([
                zip.clone(),
                s.mean_price.to_string(),
                s.tier.as_str().to_string(),
                s.n_listings.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-zip mean prices and tiers.
pub fn price_tiers(listings: &[CleanListing]) -> Result<ZipTierTable> {
    let prices: Vec<f64> = listings.iter().map(|l| l.price).collect();
    let mut per_zip: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for l in listings {
        if let Some(z) = &l.zipcode {
            let e = per_zip.entry(z.clone()).or_insert((0.0, 0));
            e.0 += l.price;
            e.1 += 1;
        }
    }
    if per_zip.is_empty() {
        return Err(Error::Empty("no listing has a zipcode".into()));
    }
    let (global_mean_price, global_sd_price) = mean_sd(&prices)?;
    let zips = per_zip
        .into_iter()
        .map(|(zip, (sum, n))| {
            let mean_price = sum / n as f64;
            let tier = classify_tier(mean_price, global_mean_price, global_sd_price);
            (
                zip,
                ZipStats {
                    mean_price,
                    n_listings: n,
                    tier,
                },
            )
        })
        .collect();
    Ok(ZipTierTable {
        global_mean_price,
        global_sd_price,
        zips,
    })
}

/// Listings with `lo <= number_of_reviews <= hi`.
pub fn filter_by_reviews(listings: &[CleanListing], lo: u32, hi: u32) -> Result<Vec<CleanListing>> {
    if lo > hi {
        return Err(Error::Domain(format!("review range [{lo}, {hi}] is empty")));
    }
    Ok(listings
        .iter()
        .filter(|l| (lo..=hi).contains(&l.number_of_reviews))
        .cloned()
        .collect())
}

/// Listings whose zipcode equals `zip` exactly.
pub fn filter_by_zip(listings: &[CleanListing], zip: &str) -> Vec<CleanListing> {
    listings
        .iter()
        .filter(|l| l.zipcode.as_deref() == Some(zip))
        .cloned()
        .collect()
}
