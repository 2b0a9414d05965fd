//! Property tests for the structural invariants that must hold on any
//! input, not just the seeded corpora.

use proptest::collection::vec;
use proptest::prelude::*;

use biovss::bloom::{build_count_filters, build_sketches};
use biovss::dataset::{Vector, VectorSet};
use biovss::distance::{
    aggregate_hausdorff, euclidean_matrix, hausdorff, mean_min, min_dist, DistanceMatrix,
};
use biovss::hash::{encode_database, random_projection, wta_encode};
use biovss::sparse::{decode_store, encode_store, StoreLayout};
use biovss::VectorSetDatabase;

fn arb_set(id: u64, dim: usize, max_m: usize) -> impl Strategy<Value = VectorSet> {
    vec(vec(-10.0f32..10.0, dim), 1..=max_m).prop_map(move |vectors| {
        VectorSet::new(
            id,
            vectors.into_iter().map(|v| Vector::new(v).unwrap()).collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Hausdorff is symmetric, zero on identical sets, and sandwiched
    /// between the minimum and maximum pairwise distances.
    #[test]
    fn hausdorff_metric_properties(
        q in arb_set(0, 6, 5),
        t in arb_set(1, 6, 5),
    ) {
        let d_qt = hausdorff(&q, &t).unwrap();
        let d_tq = hausdorff(&t, &q).unwrap();
        prop_assert_eq!(d_qt, d_tq);
        prop_assert_eq!(hausdorff(&q, &q).unwrap(), 0.0);

        let grid = euclidean_matrix(&q, &t).unwrap();
        let mut max_pair = f64::NEG_INFINITY;
        for i in 0..grid.rows() {
            for j in 0..grid.cols() {
                max_pair = max_pair.max(grid.get(i, j));
            }
        }
        prop_assert!(min_dist(&q, &t).unwrap() <= d_qt + 1e-12);
        prop_assert!(d_qt <= max_pair + 1e-12);
        // Hausdorff equals its matrix-level aggregation.
        prop_assert!((aggregate_hausdorff(&grid) - d_qt).abs() <= 1e-12 * d_qt.max(1.0));
        // mean_min is bounded by Hausdorff on the directional side.
        prop_assert!(mean_min(&q, &t).unwrap() <= d_qt + 1e-12);
    }

    /// The aggregation matches an inline double-loop oracle on arbitrary
    /// nonnegative matrices.
    #[test]
    fn hausdorff_aggregation_oracle(
        rows in vec(vec(0.0f64..100.0, 1..8), 1..8),
    ) {
        let cols = rows[0].len();
        let rect: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().cycle().take(cols).copied().collect())
            .collect();
        let grid = DistanceMatrix::from_rows(&rect).unwrap();
        let mut fwd = f64::NEG_INFINITY;
        for r in &rect {
            fwd = fwd.max(r.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let mut bwd = f64::NEG_INFINITY;
        for j in 0..cols {
            bwd = bwd.max(rect.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min));
        }
        prop_assert_eq!(aggregate_hausdorff(&grid), fwd.max(bwd));
    }

    /// Every WTA code has exactly `l` set bits, strictly increasing and in
    /// range, for any input vector and any valid `l`.
    #[test]
    fn wta_popcount_invariant(
        components in vec(-100.0f32..100.0, 12),
        l in 1usize..=64,
    ) {
        let w = random_projection(3, 64, 12, 0.15).unwrap();
        let code = wta_encode(&w, &Vector::new(components).unwrap(), l).unwrap();
        prop_assert_eq!(code.popcount(), l);
        prop_assert!(code.set_bits().windows(2).all(|p| p[0] < p[1]));
        prop_assert!((*code.set_bits().last().unwrap() as usize) < 64);
    }

    /// Count filters and sketches stay consistent: a sketch bit is set
    /// exactly when the counter there is positive, and counter mass is
    /// m * l.
    #[test]
    fn filter_sketch_consistency(
        sets in vec(vec(vec(-5.0f32..5.0, 8), 1..5), 1..6),
    ) {
        let db = VectorSetDatabase::new(
            sets.into_iter()
                .enumerate()
                .map(|(i, vs)| {
                    VectorSet::new(
                        i as u64,
                        vs.into_iter().map(|v| Vector::new(v).unwrap()).collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap();
        let w = random_projection(9, 96, 8, 0.2).unwrap();
        let enc = encode_database(&db, &w, 8).unwrap();
        let filters = build_count_filters(&enc);
        let sketches = build_sketches(&enc);
        for (pos, set) in db.sets().iter().enumerate() {
            prop_assert_eq!(filters[pos].total(), (set.len() * 8) as u64);
            for bit in 0..96 {
                prop_assert_eq!(sketches[pos].get(bit), filters[pos].counters()[bit] > 0);
            }
        }
    }

    /// All three storage layouts round-trip arbitrary counter matrices
    /// bit-exactly.
    #[test]
    fn store_round_trip(
        rows in vec(vec(0u32..6, 1..24), 1..8),
    ) {
        let cols = rows[0].len();
        let filters: Vec<biovss::bloom::CountBloomFilter> = rows
            .iter()
            .map(|r| {
                biovss::bloom::CountBloomFilter::from_counters(
                    r.iter().cycle().take(cols).copied().collect(),
                )
            })
            .collect();
        for layout in [StoreLayout::Dense, StoreLayout::Coo, StoreLayout::Csr] {
            let store = encode_store(&filters, layout).unwrap();
            prop_assert_eq!(decode_store(&store).unwrap(), filters.clone());
        }
    }
}
