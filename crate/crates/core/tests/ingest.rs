use std::collections::BTreeMap;

use occupancy_core::features::{build_matrix, feature_value, word_count, NUMERIC_FEATURES, OCCUPANCY_RATE};
use occupancy_core::ingest::{
    clean, join_occupancy, parse_listings, parse_occupancy, write_clean_csv, JoinedRow, RawListing,
};
use occupancy_core::lexicon::SentimentLexicon;
use occupancy_core::{Error, ExecMode};
use proptest::prelude::*;

const HEADER: &str = "host_id,name,summary,space,property_type,accommodates,bathrooms,bedrooms,beds,bed_type,\
price,number_of_reviews,zipcode,amenities,rating\n";

#[test]
fn listings_file_round_trip() {
    let text = format!(
        "{HEADER}1,Loft,Great location!,NA,Apartment,2,1,1,1,Real Bed,\"$1,234.00\",10,10011,\"{{TV,\"\"Wireless Internet\"\",Kitchen}}\",N/A\n\
         2,Room,,,House,1,1.5,1,1,Futon,$80,3,11211,{{}},4.5\n\
         x,bad,row\n"
    );
    let parsed = parse_listings(text.as_bytes(), b',').unwrap();
    assert_eq!(parsed.listings.len(), 2);
    assert_eq!(parsed.skipped.len(), 1);
    assert_eq!(parsed.skipped[0].row, 2);
    let first = &parsed.listings[0];
    assert_eq!(first.price, Some(1234.0));
    assert_eq!(first.rating, None);
    assert_eq!(first.space, None);
    assert_eq!(parsed.listings[1].summary, None);

    let occupancy = parse_occupancy("host_id,occupancy_rate\n1,0.5\n2,0.25\n".as_bytes(), b',').unwrap();
    let joined = join_occupancy(parsed.listings, &occupancy);
    let out = clean(&joined.rows, &SentimentLexicon::afinn_111(), ExecMode::Sequential).unwrap();
    assert_eq!(out.listings[0].num_amenities, 3);
    assert_eq!(out.listings[0].rating, 4.5);
    assert!(out.listings[0].rating_imputed);
    assert_eq!(out.listings[0].sentiment_summary, 3);
    assert_eq!(out.listings[1].summary_length, 0);
    assert_eq!(out.listings[1].sentiment_summary, 0);
}

#[test]
fn occupancy_file_rules() {
    let rows = parse_occupancy("host_id,occupancy_rate\n3493067,0.895\n".as_bytes(), b',').unwrap();
    assert_eq!(rows, BTreeMap::from([(3493067, 0.895)]));
    assert!(parse_occupancy("host_id,occupancy_rate\n1,1.5\n".as_bytes(), b',').is_err());
    assert!(matches!(
        parse_occupancy("host_id,occupancy_rate\n1,0.5\n1,0.6\n".as_bytes(), b','),
        Err(Error::DuplicateHost(1))
    ));
    assert!(parse_listings("name,price\nx,1\n".as_bytes(), b',').is_err());
    let tabbed = parse_occupancy("host_id\toccupancy_rate\n7\t0.1\n".as_bytes(), b'\t').unwrap();
    assert_eq!(tabbed[&7], 0.1);
}

fn raw_listing() -> impl Strategy<Value = RawListing> {
    let text = prop::option::weighted(0.8, "[a-z ]{0,40}|(good|bad|cozy|dirty) [a-z]{1,8}");
    (
        (text.clone(), text, 0u32..6, prop::option::weighted(0.9, 0.5f64..4.0)),
        (
            prop::option::weighted(0.9, 0u32..4),
            prop::option::weighted(0.9, 0u32..5),
        ),
        (prop::option::weighted(0.9, 10.0f64..900.0), 0u32..200),
        (
            prop::option::weighted(0.9, "1[01][0-9]{3}"),
            prop::option::weighted(0.8, 1.0f64..5.0),
        ),
        prop::option::of(prop::sample::select(vec![
            "{TV,Kitchen}",
            "{}",
            "{\"A B\",C,D}",
            "garbled",
        ])),
    )
        .prop_map(
            |(
                (summary, space, accommodates, bathrooms),
                (bedrooms, beds),
                (price, reviews),
                (zip, rating),
                amenities,
            )| {
                RawListing {
                    host_id: 0,
                    name: None,
                    summary,
                    space,
                    property_type: "Apartment".into(),
                    accommodates,
                    bathrooms,
                    bedrooms,
                    beds,
                    bed_type: "Real Bed".into(),
                    price,
                    number_of_reviews: reviews,
                    zipcode: zip,
                    amenities_raw: amenities.map(String::from),
                    rating,
                }
            },
        )
}

fn joined_rows() -> impl Strategy<Value = Vec<JoinedRow>> {
    prop::collection::vec((raw_listing(), 0.0f64..=1.0), 1..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (mut listing, occupancy_rate))| {
                listing.host_id = i as i64;
                JoinedRow {
                    listing,
                    occupancy_rate,
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn clean_accounts_for_every_row(rows in joined_rows()) {
        let lex = SentimentLexicon::afinn_111();
        match clean(&rows, &lex, ExecMode::Sequential) {
            Ok(out) => {
                prop_assert_eq!(out.listings.len() + out.dropped.len(), rows.len());
                prop_assert!(out.listings.len() <= rows.len());
                let observed: Vec<f64> = rows
                    .iter()
                    .filter(|r| !out.dropped.iter().any(|d| d.host_id == r.listing.host_id))
                    .filter_map(|r| r.listing.rating)
                    .collect();
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                prop_assert!((out.imputed_rating - mean).abs() < 1e-12);
                let counts: usize = out.drop_counts().values().sum();
                prop_assert_eq!(counts, out.dropped.len());
            }
            Err(Error::NoUsableRows | Error::Degenerate(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn clean_is_idempotent(rows in joined_rows()) {
        let lex = SentimentLexicon::afinn_111();
        if let Ok(first) = clean(&rows, &lex, ExecMode::Sequential) {
            let again: Vec<JoinedRow> = first.listings.iter().map(|l| l.to_joined()).collect();
            let second = clean(&again, &lex, ExecMode::Sequential).unwrap();
            prop_assert!(second.dropped.is_empty());
            for (a, b) in first.listings.iter().zip(&second.listings) {
                let mut a = a.clone();
                // Imputed ratings are observed values on the second pass.
                a.rating_imputed = false;
                prop_assert_eq!(&a, b);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree(rows in joined_rows()) {
        let lex = SentimentLexicon::afinn_111();
        let seq = clean(&rows, &lex, ExecMode::Sequential).map(|o| o.listings);
        let par = clean(&rows, &lex, ExecMode::Parallel).map(|o| o.listings);
        prop_assert_eq!(seq.ok(), par.ok());
    }

    #[test]
    fn matrix_rows_follow_listing_order(rows in joined_rows()) {
        let lex = SentimentLexicon::afinn_111();
        if let Ok(out) = clean(&rows, &lex, ExecMode::Sequential) {
            let m = build_matrix(&out.listings, &NUMERIC_FEATURES, OCCUPANCY_RATE).unwrap();
            for (i, l) in out.listings.iter().enumerate() {
                prop_assert_eq!(m.y()[i], l.occupancy_rate);
                for (name, col) in m.names().iter().zip(m.columns()) {
                    prop_assert_eq!(col[i], feature_value(l, name).unwrap());
                }
            }
            let mut csv = Vec::new();
            write_clean_csv(&out.listings, &mut csv).unwrap();
            prop_assert_eq!(String::from_utf8(csv).unwrap().lines().count(), out.listings.len() + 1);
        }
    }

    #[test]
    fn empty_text_has_no_length_and_no_sentiment(t in prop::option::of("[ \t]{0,5}")) {
        let lex = SentimentLexicon::afinn_111();
        prop_assert_eq!(word_count(t.as_deref()), 0);
        prop_assert_eq!(lex.score_opt(t.as_deref()), 0);
    }
}
