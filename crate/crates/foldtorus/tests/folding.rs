// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use foldtorus::folding::{build_delta, fold_sequence, is_homotopy_equivalence};
use foldtorus::graph_maps::GraphMap;
use foldtorus::rational::{q, qr};
use proptest::prelude::*;

#[test]
fn delta_of_running_example() {
    let m = common::running();
    let d = build_delta(&m).unwrap();
    // |f(a)| + |f(b)| + |f(c)| + |f(d)| = 1 + 1 + 2 + 6 pieces.
    assert_eq!(d.labeled.graph.num_edges(), 10);
    assert_eq!(d.labeled.graph.num_vertices(), 8);
    assert!(d.labeled.graph.edge_by_name("d.6").is_some());
    assert!(d.labeled.is_tame());
}

#[test]
fn running_example_folds_in_the_reference_order() {
    let m = common::running();
    let fs = common::folds(&m);
    let reference = common::reference_folds(&m);
    assert_eq!(fs.folds, reference.folds);
    let r = fs.report();
    assert_eq!(r.stage_edges, vec![10, 9, 8, 7, 6, 5, 4]);
    assert_eq!(r.stage_vertices, vec![8, 7, 6, 5, 4, 3, 2]);
    assert_eq!(fs.total_length, q(6));
    let times: Vec<_> = (0..=6).map(|k| qr(k, 6)).collect();
    assert_eq!(fs.times, times);
    let last = fs.stage(fs.len());
    assert!(last.is_folded());
    assert_eq!(last.graph.num_edges(), 4);
}

#[test]
fn non_injective_map_is_not_a_homotopy_equivalence() {
    let m = GraphMap::from_words(common::rose(2), &[("a", "a b"), ("b", "a b")]).unwrap();
    assert!(!is_homotopy_equivalence(&m).unwrap());
    assert!(is_homotopy_equivalence(&common::running()).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_rose_maps_fold_onto_the_rose(rank in 2usize..4, moves in prop::collection::vec((0usize..4, 0usize..4), 1..5)) {
        let m = common::positive_rose_map(rank, &moves);
        prop_assert!(is_homotopy_equivalence(&m).unwrap());
        let d = build_delta(&m).unwrap();
        let fs = fold_sequence(&d, &m.graph).unwrap();
        let r = fs.report();
        // One edge disappears per fold and the last stage is the rose.
        for w in r.stage_edges.windows(2) {
            prop_assert_eq!(w[0], w[1] + 1);
        }
        prop_assert_eq!(*r.stage_edges.last().unwrap(), rank);
        prop_assert_eq!(*r.stage_vertices.last().unwrap(), 1);
        prop_assert_eq!(fs.times.first().cloned(), Some(q(0)));
        if !fs.is_empty() {
            prop_assert_eq!(fs.times.last().cloned(), Some(q(1)));
        }
        prop_assert!(fs.times.windows(2).all(|w| w[0] < w[1]));
    }
}
