// SPDX-License-Identifier: MIT OR Apache-2.0
#![allow(dead_code)]

use foldtorus::graph_core::Graph;
use foldtorus::graph_maps::GraphMap;
use foldtorus::text::{parse_map, RUNNING_EXAMPLE};

pub fn running() -> GraphMap {
    parse_map(RUNNING_EXAMPLE).unwrap()
}

pub fn rose(rank: usize) -> Graph {
    let mut g = Graph::new();
    let v = g.add_vertex("v");
    for i in 0..rank {
        g.add_edge(((b'a' + i as u8) as char).to_string(), v, v);
    }
    g
}

/// Composition of positive elementary automorphisms of a rose, encoded as
/// `(i, j)` meaning `x_i -> x_i x_j` when `i != j`, and a cyclic shift of the
/// letters when `i == j`. Positive maps of a rose are train tracks.
pub fn positive_rose_map(rank: usize, moves: &[(usize, usize)]) -> GraphMap {
    let letters: Vec<String> = (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut images: Vec<Vec<usize>> = (0..rank).map(|i| vec![i]).collect();
    for (i, j) in moves {
        let (i, j) = (i % rank, j % rank);
        // Precompose with the elementary move.
        let step: Vec<Vec<usize>> = if i == j {
            (0..rank).map(|k| vec![(k + 1) % rank]).collect()
        } else {
            (0..rank).map(|k| if k == i { vec![i, j] } else { vec![k] }).collect()
        };
        images = step.iter().map(|w| w.iter().flat_map(|x| images[*x].clone()).collect()).collect();
    }
    let words: Vec<String> =
        images.iter().map(|w| w.iter().map(|x| letters[*x].clone()).collect::<Vec<_>>().join(" ")).collect();
    let pairs: Vec<(&str, &str)> = letters.iter().map(|s| s.as_str()).zip(words.iter().map(|s| s.as_str())).collect();
    GraphMap::from_words(rose(rank), &pairs).unwrap()
}

use foldtorus::folding::{build_delta, fold_sequence, fold_sequence_with_order, FoldSequence};
use foldtorus::mapping_torus::{build_torus, TrapezoidComplex};

/// Reference fold order of the running example.
pub const REFERENCE_ORDER: [(&str, &str); 6] =
    [("b.1^-1", "c.2^-1"), ("c.1^-1", "d.1"), ("b.1^-1", "d.2"), ("a.1", "d.3"), ("c.1", "d.4"), ("b.1", "d.5")];

pub fn folds(m: &GraphMap) -> FoldSequence {
    fold_sequence(&build_delta(m).unwrap(), &m.graph).unwrap()
}

pub fn reference_folds(m: &GraphMap) -> FoldSequence {
    let d = build_delta(m).unwrap();
    let g = &d.labeled.graph;
    let order: Vec<(usize, usize)> =
        REFERENCE_ORDER.iter().map(|(a, b)| (g.edge_by_name(a).unwrap(), g.edge_by_name(b).unwrap())).collect();
    fold_sequence_with_order(&d, &m.graph, &order).unwrap()
}

pub fn torus(m: &GraphMap) -> TrapezoidComplex {
    build_torus(m, &folds(m)).unwrap()
}

/// Twelve positive rose maps of ranks 2 to 4.
pub fn corpus() -> Vec<GraphMap> {
    let moves: [&[(usize, usize)]; 12] = [
        &[(0, 1), (1, 0)],
        &[(0, 1), (1, 2), (2, 0)],
        &[(0, 1), (1, 1), (0, 2)],
        &[(1, 0), (0, 1), (2, 1), (1, 2)],
        &[(0, 1), (0, 0), (1, 0)],
        &[(2, 0), (0, 1), (1, 2), (0, 0)],
        &[(0, 1), (1, 0), (0, 1)],
        &[(0, 1), (1, 2), (2, 3), (3, 0)],
        &[(0, 0), (0, 1), (2, 3), (1, 2), (3, 0)],
        &[(1, 2), (2, 0), (0, 1), (1, 1)],
        &[(0, 2), (2, 1), (1, 0), (0, 1)],
        &[(3, 1), (1, 0), (0, 2), (2, 3), (0, 0)],
    ];
    let ranks = [2, 3, 3, 3, 2, 3, 2, 4, 4, 3, 3, 4];
    ranks.iter().zip(moves).map(|(r, mv)| positive_rose_map(*r, mv)).collect()
}
