use occupancy_core::features::{count_amenities, price_per_occupant, FeatureMatrix};
use proptest::prelude::*;

#[test]
fn derived_feature_examples() {
    assert_eq!(count_amenities(Some("{TV,\"Wireless Internet\",Kitchen}")), 3);
    assert_eq!(count_amenities(Some("{}")), 0);
    assert_eq!(count_amenities(None), 0);
    assert_eq!(price_per_occupant(100.0, 4).unwrap(), 25.0);
    assert_eq!(price_per_occupant(75.0, 1).unwrap(), 75.0);
    assert!(price_per_occupant(100.0, 0).is_err());
}

fn matrix() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..5, 1usize..30).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(prop::collection::vec(-1e3f64..1e3, n), p),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(cols, y)| {
                let names = (0..p).map(|j| format!("f{j}")).collect();
                FeatureMatrix::new(names, cols, "y", y).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn quadratic_terms_keep_original_columns(m in matrix(), pick in any::<prop::sample::Index>()) {
        let name = m.names()[pick.index(m.p())].clone();
        let q = m.augment_quadratic(&[name.as_str()]).unwrap();
        prop_assert_eq!(q.p(), m.p() + 1);
        for (a, b) in m.columns().iter().zip(q.columns()) {
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let original = m.column(&name).unwrap();
        let squared = q.column(&format!("{name}^2")).unwrap();
        for (x, s) in original.iter().zip(squared) {
            prop_assert_eq!(x * x, *s);
        }
        prop_assert_eq!(&m.augment_quadratic::<&str>(&[]).unwrap(), &m);
    }

    #[test]
    fn take_rows_reorders_targets_with_columns(m in matrix(), seed in any::<u64>()) {
        let perm = occupancy_core::evaluate::permutation(m.n(), seed);
        let t = m.take_rows(&perm);
        for (i, &src) in perm.iter().enumerate() {
            prop_assert_eq!(t.y()[i], m.y()[src]);
            for (a, b) in m.columns().iter().zip(t.columns()) {
                prop_assert_eq!(b[i], a[src]);
            }
        }
    }
}
