// SPDX-License-Identifier: MIT OR Apache-2.0

//! Combinatorial graph self-maps and their certificates: transition
//! matrices, Perron–Frobenius data, gates, taken turns, Whitehead graphs,
//! train-track and cleanliness verdicts, eigenmetric lengths.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigInt;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use serde::{Serialize, Serializer};

use crate::error::{internal, invalid, precondition, Result};
use crate::graph_core::{EdgeId, EdgePath, Graph, Turn, VertexId};
use crate::linalg;
use crate::pf::{self, PfEnclosure, SparseMat};
use crate::rational::{self, qr, Q};

/// Vertex map plus an edge-path image for every oriented edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphMap {
    pub graph: Graph,
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<EdgePath>,
}

/// Parses a whitespace-separated word such as `b a^-1 d`.
pub fn parse_word(g: &Graph, word: &str) -> Result<Vec<EdgeId>> {
    word.split_whitespace()
        .map(|t| g.edge_by_name(t).map_or_else(|| invalid(format!("unknown edge `{t}`")), Ok))
        .collect()
}

impl GraphMap {
    /// Builds a map from images of the declared edges. Vertices missing from
    /// `vertex_map` are inferred from image endpoints.
    pub fn new(
        graph: Graph,
        vertex_map: BTreeMap<VertexId, VertexId>,
        images: BTreeMap<EdgeId, Vec<EdgeId>>,
    ) -> Result<Self> {
        let mut vmap: Vec<Option<VertexId>> = (0..graph.num_vertices()).map(|v| vertex_map.get(&v).copied()).collect();
        let mut edge_map = vec![EdgePath::trivial(0); graph.num_oriented()];
        for e in graph.positive_edges() {
            let Some(word) = images.get(&e) else {
                return invalid(format!("no image given for edge {}", graph.edge_names[e]));
            };
            let path = if word.is_empty() {
                let Some(v) = vmap[graph.origin[e]] else {
                    return invalid(format!("empty image of {} needs an explicit vertex map", graph.edge_names[e]));
                };
                EdgePath::trivial(v)
            } else {
                EdgePath::from_edges(&graph, word.clone())?
            };
            for (v, w) in [(graph.origin[e], path.start), (graph.terminus(e), path.end(&graph))] {
                match vmap[v] {
                    Some(x) if x != w => {
                        return invalid(format!(
                            "image of {} is incompatible with the vertex map at {}",
                            graph.edge_names[e], graph.vertex_names[v]
                        ))
                    }
                    _ => vmap[v] = Some(w),
                }
            }
            edge_map[graph.inv[e]] = path.inverse(&graph);
            edge_map[e] = path;
        }
        let vertex_map = vmap
            .iter()
            .enumerate()
            .map(|(v, w)| w.map_or_else(|| invalid(format!("vertex {} has no image", graph.vertex_names[v])), Ok))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphMap { graph, vertex_map, edge_map })
    }

    /// Convenience constructor from `(edge, image word)` pairs.
    pub fn from_words(graph: Graph, images: &[(&str, &str)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (e, w) in images {
            let id = graph.edge_by_name(e).map_or_else(|| invalid(format!("unknown edge `{e}`")), Ok)?;
            map.insert(id, parse_word(&graph, w)?);
        }
        GraphMap::new(graph, BTreeMap::new(), map)
    }

    pub fn identity(graph: Graph) -> Self {
        let edge_map = (0..graph.num_oriented()).map(|e| EdgePath::edge(&graph, e)).collect();
        let vertex_map = (0..graph.num_vertices()).collect();
        GraphMap { graph, vertex_map, edge_map }
    }

    pub fn image(&self, e: EdgeId) -> &EdgePath {
        &self.edge_map[e]
    }

    /// `None` when regular, otherwise the reason.
    pub fn irregularity(&self) -> Option<String> {
        for e in self.graph.positive_edges() {
            let p = &self.edge_map[e];
            if p.is_empty() {
                return Some(format!("image of {} is degenerate", self.graph.edge_names[e]));
            }
            if !p.is_tight(&self.graph) {
                return Some(format!("image not tight: {} -> {}", self.graph.edge_names[e], self.graph.word(p)));
            }
        }
        None
    }

    pub fn is_regular(&self) -> bool {
        self.irregularity().is_none()
    }

    pub fn require_regular(&self) -> Result<()> {
        match self.irregularity() {
            None => Ok(()),
            Some(r) => precondition(format!("not regular: {r}")),
        }
    }

    /// Image of a path by substitution, without tightening.
    pub fn apply(&self, p: &EdgePath) -> EdgePath {
        let mut edges = Vec::new();
        for e in &p.edges {
            edges.extend_from_slice(&self.edge_map[*e].edges);
        }
        EdgePath { start: self.vertex_map[p.start], edges }
    }

    /// The tight path `f^n(e)`.
    pub fn iterate(&self, e: EdgeId, n: u32) -> Result<EdgePath> {
        if n == 0 {
            return invalid("iterate needs n >= 1");
        }
        let mut p = EdgePath::edge(&self.graph, e);
        for _ in 0..n {
            p = self.apply(&p).tighten(&self.graph)?;
        }
        Ok(p)
    }

    /// Composition `self ∘ other` on the same graph, tightened.
    pub fn compose(&self, other: &GraphMap) -> Result<GraphMap> {
        let g = &self.graph;
        let mut edge_map = Vec::with_capacity(g.num_oriented());
        for e in 0..g.num_oriented() {
            edge_map.push(self.apply(&other.edge_map[e]).tighten(g)?);
        }
        let vertex_map = other.vertex_map.iter().map(|v| self.vertex_map[*v]).collect();
        Ok(GraphMap { graph: g.clone(), vertex_map, edge_map })
    }

    /// First edge of `f(e)`.
    pub fn derivative(&self, e: EdgeId) -> EdgeId {
        self.edge_map[e].edges[0]
    }

    pub fn transition_matrix(&self) -> Vec<Vec<u64>> {
        let pos: Vec<EdgeId> = self.graph.positive_edges().collect();
        let index: BTreeMap<EdgeId, usize> = pos.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        pos.iter()
            .map(|e| {
                let mut row = vec![0u64; pos.len()];
                for x in &self.edge_map[*e].edges {
                    row[index[&self.graph.unoriented(*x)]] += 1;
                }
                row
            })
            .collect()
    }

    pub fn transition_data(&self) -> TransitionData {
        TransitionData::from_matrix(self.positive_names(), self.transition_matrix(), &qr(1, 1_000_000_000))
    }

    fn positive_names(&self) -> Vec<String> {
        self.graph.positive_edges().map(|e| self.graph.edge_names[e].clone()).collect()
    }

    pub fn is_expanding(&self) -> bool {
        growth_unbounded(&self.transition_matrix()).iter().all(|x| *x)
    }

    /// Partition of the link of `v` by first edge of `f(e)`.
    pub fn gates(&self, v: VertexId) -> Vec<Vec<EdgeId>> {
        let mut classes: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
        for e in self.graph.link(v) {
            classes.entry(self.derivative(e)).or_default().push(e);
        }
        sorted_classes(classes.into_values().collect())
    }

    /// Partition of the link of `v` by eventual agreement of `D^k`.
    pub fn stable_gates(&self, v: VertexId) -> Vec<Vec<EdgeId>> {
        let link = self.graph.link(v);
        let mut uf = UnionFind::<usize>::new(link.len());
        for i in 0..link.len() {
            for j in i + 1..link.len() {
                if self.degenerating_steps(Turn::new(link[i], link[j])).is_some() {
                    uf.union(i, j);
                }
            }
        }
        let mut classes: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
        for (i, e) in link.iter().enumerate() {
            classes.entry(uf.find(i)).or_default().push(*e);
        }
        sorted_classes(classes.into_values().collect())
    }

    pub fn is_tame(&self) -> bool {
        (0..self.graph.num_vertices()).all(|v| self.gates(v).len() >= 2)
    }

    /// Smallest `k >= 1` with `D^k` degenerating the turn, if any.
    pub fn degenerating_steps(&self, t: Turn) -> Option<usize> {
        let mut seen = HashSet::new();
        let mut cur = t;
        let mut k = 0;
        while !cur.is_degenerate() {
            if !seen.insert(cur) {
                return None;
            }
            cur = Turn::new(self.derivative(cur.0), self.derivative(cur.1));
            k += 1;
        }
        Some(k)
    }

    pub fn is_legal(&self, t: Turn) -> bool {
        t.is_degenerate() || self.degenerating_steps(t).is_none()
    }

    /// Turns contained in `f^k(e)` for some `1 <= k <= n`.
    pub fn turns_up_to(&self, n: u32) -> Result<BTreeSet<Turn>> {
        let mut out = BTreeSet::new();
        for e in self.graph.positive_edges() {
            for k in 1..=n {
                out.extend(self.iterate(e, k)?.turns(&self.graph));
            }
        }
        Ok(out)
    }

    /// Turns taken by some iterate, by closing the image turns under `D_f`.
    pub fn taken_turns(&self) -> BTreeSet<Turn> {
        let mut out: BTreeSet<Turn> = BTreeSet::new();
        let mut todo: Vec<Turn> = Vec::new();
        for e in self.graph.positive_edges() {
            for t in self.edge_map[e].turns(&self.graph) {
                if out.insert(t) {
                    todo.push(t);
                }
            }
        }
        while let Some(t) = todo.pop() {
            let d = Turn::new(self.derivative(t.0), self.derivative(t.1));
            if !d.is_degenerate() && out.insert(d) {
                todo.push(d);
            }
        }
        out
    }

    pub fn whitehead_graph(&self, v: VertexId) -> WhiteheadGraph {
        self.whitehead_from(v, &self.taken_turns())
    }

    fn whitehead_from(&self, v: VertexId, turns: &BTreeSet<Turn>) -> WhiteheadGraph {
        let nodes = self.graph.link(v);
        let adjacencies: Vec<Turn> =
            turns.iter().filter(|t| !t.is_degenerate() && self.graph.origin[t.0] == v).copied().collect();
        WhiteheadGraph { vertex: v, nodes, adjacencies }
    }

    pub fn whitehead_graphs(&self) -> Vec<WhiteheadGraph> {
        let turns = self.taken_turns();
        (0..self.graph.num_vertices()).map(|v| self.whitehead_from(v, &turns)).collect()
    }

    pub fn all_whitehead_connected(&self) -> bool {
        self.whitehead_graphs().iter().all(|w| w.is_connected())
    }

    /// Decides the train-track property. With [`HomotopyCheck::Verify`] the
    /// homotopy-equivalence condition is checked by folding.
    pub fn is_train_track(&self, he: HomotopyCheck) -> Result<TrainTrackReport> {
        self.require_regular()?;
        if let Some(v) = (0..self.graph.num_vertices()).find(|v| self.graph.valence(*v) == 1) {
            return precondition(format!("vertex {} has valence 1", self.graph.vertex_names[v]));
        }
        if he == HomotopyCheck::Verify && !crate::folding::is_homotopy_equivalence(self)? {
            return Ok(TrainTrackReport { verdict: false, witness: TrainTrackWitness::NotHomotopyEquivalence });
        }
        let mut image_turns = BTreeSet::new();
        for e in self.graph.positive_edges() {
            for t in self.edge_map[e].turns(&self.graph) {
                if image_turns.insert(t) {
                    if let Some(steps) = self.degenerating_steps(t) {
                        return Ok(TrainTrackReport {
                            verdict: false,
                            witness: TrainTrackWitness::IllegalTurn {
                                turn: self.turn_names(t),
                                steps,
                                source: format!("image of {}", self.graph.edge_names[e]),
                            },
                        });
                    }
                }
            }
        }
        let mut valence_two = 0;
        for v in 0..self.graph.num_vertices() {
            let link = self.graph.link(v);
            if link.len() == 2 {
                let t = Turn::new(link[0], link[1]);
                valence_two += 1;
                if let Some(steps) = self.degenerating_steps(t) {
                    return Ok(TrainTrackReport {
                        verdict: false,
                        witness: TrainTrackWitness::IllegalTurn {
                            turn: self.turn_names(t),
                            steps,
                            source: format!("valence-two vertex {}", self.graph.vertex_names[v]),
                        },
                    });
                }
            }
        }
        Ok(TrainTrackReport {
            verdict: true,
            witness: TrainTrackWitness::Legal { image_turns: image_turns.len(), valence_two_turns: valence_two },
        })
    }

    fn turn_names(&self, t: Turn) -> (String, String) {
        (self.graph.edge_names[t.0].clone(), self.graph.edge_names[t.1].clone())
    }

    pub fn cleanliness(&self, he: HomotopyCheck) -> Result<Cleanliness> {
        let tt = self.is_train_track(he)?;
        if !tt.verdict {
            return precondition("not a train track map");
        }
        if !self.is_expanding() {
            return precondition("not expanding");
        }
        let data = self.transition_data();
        if !data.irreducible {
            return Ok(Cleanliness::NotWeaklyClean { witness: CleanWitness::ReducibleMatrix });
        }
        for w in self.whitehead_graphs() {
            if !w.is_connected() {
                return Ok(Cleanliness::NotWeaklyClean {
                    witness: CleanWitness::DisconnectedWhitehead { vertex: self.graph.vertex_names[w.vertex].clone() },
                });
            }
        }
        match data.positive_power {
            Some(power) => Ok(Cleanliness::Clean { power }),
            None => internal("weakly clean map without a positive power of its transition matrix"),
        }
    }

    pub fn full_irreducibility(&self, hyperbolic: bool, he: HomotopyCheck) -> Result<FullIrreducibility> {
        Ok(match self.cleanliness(he)? {
            Cleanliness::Clean { power } if hyperbolic => FullIrreducibility::FullyIrreducible { power },
            Cleanliness::Clean { power } => FullIrreducibility::Undecided { power },
            Cleanliness::NotWeaklyClean { witness: CleanWitness::ReducibleMatrix } => {
                FullIrreducibility::NotFullyIrreducible { reason: "reducible transition matrix".into() }
            }
            Cleanliness::NotWeaklyClean { witness: CleanWitness::DisconnectedWhitehead { vertex } } if hyperbolic => {
                FullIrreducibility::NotFullyIrreducible {
                    reason: format!("Whitehead graph at {vertex} is disconnected"),
                }
            }
            Cleanliness::NotWeaklyClean { .. } => FullIrreducibility::NotDecided,
        })
    }

    /// Positive rational lengths, summing to one, approximating the
    /// Perron–Frobenius eigenvector to within `precision` per entry.
    pub fn eigenmetric_lengths(&self, precision: &Q) -> Result<Vec<Q>> {
        if !self.is_expanding() {
            return precondition("eigenmetric needs an expanding map");
        }
        let a = self.transition_matrix();
        if !is_irreducible(&a) {
            return precondition("eigenmetric needs an irreducible transition matrix");
        }
        let enc = pf::enclose(&SparseMat::from_dense(&a), &qr(1, 1_000_000_000_000), 400);
        let den = {
            let mut d: i64 = 4;
            while Q::from_integer(BigInt::from(d)) * precision < qr(64, 1) && d < (1 << 52) {
                d *= 2;
            }
            d
        };
        let mut x: Vec<Q> = enc.vector.iter().map(|v| rational::round_to(&rational::from_f64(*v), den)).collect();
        for v in x.iter_mut() {
            if *v <= rational::zero() {
                *v = qr(1, den);
            }
        }
        let total: Q = x.iter().sum();
        Ok(x.into_iter().map(|v| v / &total).collect())
    }

    /// Copy of the map with the given lengths on the declared edges.
    pub fn with_lengths(&self, lengths: &[Q]) -> Result<GraphMap> {
        let mut m = self.clone();
        let pos: Vec<EdgeId> = m.graph.positive_edges().collect();
        if pos.len() != lengths.len() {
            return invalid("length vector has the wrong size");
        }
        for (e, l) in pos.iter().zip(lengths) {
            if *l <= rational::zero() {
                return invalid("lengths must be positive");
            }
            m.graph.set_length(*e, l.clone());
        }
        Ok(m)
    }

    pub fn entropy(&self) -> Interval {
        Interval::log_of(&self.transition_data().pf)
    }
}

fn sorted_classes(mut classes: Vec<Vec<EdgeId>>) -> Vec<Vec<EdgeId>> {
    for c in classes.iter_mut() {
        c.sort();
    }
    classes.sort();
    classes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomotopyCheck {
    Verify,
    Assume,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WhiteheadGraph {
    pub vertex: VertexId,
    pub nodes: Vec<EdgeId>,
    pub adjacencies: Vec<Turn>,
}

impl WhiteheadGraph {
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let index: BTreeMap<EdgeId, usize> = self.nodes.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut uf = UnionFind::<usize>::new(self.nodes.len());
        for t in &self.adjacencies {
            uf.union(index[&t.0], index[&t.1]);
        }
        let r = uf.find(0);
        (0..self.nodes.len()).all(|i| uf.find(i) == r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainTrackWitness {
    Legal { image_turns: usize, valence_two_turns: usize },
    IllegalTurn { turn: (String, String), steps: usize, source: String },
    NotHomotopyEquivalence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrainTrackReport {
    pub verdict: bool,
    pub witness: TrainTrackWitness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CleanWitness {
    ReducibleMatrix,
    DisconnectedWhitehead { vertex: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Cleanliness {
    NotWeaklyClean {
        witness: CleanWitness,
    },
    /// Weakly clean, hence clean: `A^power > 0`.
    Clean {
        power: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FullIrreducibility {
    FullyIrreducible {
        power: u32,
    },
    NotFullyIrreducible {
        reason: String,
    },
    /// Weakly clean, but hyperbolicity was not asserted.
    Undecided {
        power: u32,
    },
    NotDecided,
}

/// Closed real interval with `f64` endpoints rounded outward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn log_of(enc: &PfEnclosure) -> Interval {
        let lo = rational::to_f64(&enc.lo).ln();
        let hi = rational::to_f64(&enc.hi).ln();
        Interval { lo: lo - lo.abs() * 1e-14 - 1e-300, hi: hi + hi.abs() * 1e-14 + 1e-300 }
    }

    pub fn mid(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn ser_bigints<S: Serializer>(xs: &Option<Vec<BigInt>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionData {
    pub edges: Vec<String>,
    pub matrix: Vec<Vec<u64>>,
    /// Coefficients of `det(xI - A)`, constant term first; omitted for large matrices.
    #[serde(serialize_with = "ser_bigints")]
    pub charpoly: Option<Vec<BigInt>>,
    pub pf: PfEnclosure,
    /// `max_i |(A v)_i - mid * v_i|` for the reported vector.
    pub residual: f64,
    pub irreducible: bool,
    pub positive_power: Option<u32>,
}

impl TransitionData {
    pub fn from_matrix(edges: Vec<String>, matrix: Vec<Vec<u64>>, width: &Q) -> TransitionData {
        let sparse = SparseMat::from_dense(&matrix);
        let pf = pf::enclose(&sparse, width, 400);
        let mid = pf.mid();
        let residual = matrix
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let av: f64 = r.iter().zip(&pf.vector).map(|(a, v)| *a as f64 * v).sum();
                (av - mid * pf.vector[i]).abs()
            })
            .fold(0.0, f64::max);
        let charpoly = (matrix.len() <= 40).then(|| {
            let m: Vec<Vec<i64>> = matrix.iter().map(|r| r.iter().map(|x| *x as i64).collect()).collect();
            linalg::charpoly(&linalg::imat_from_i64(&m))
        });
        let irreducible = is_irreducible(&matrix);
        let positive_power = if irreducible { primitive_exponent(&matrix) } else { None };
        TransitionData { edges, matrix, charpoly, pf, residual, irreducible, positive_power }
    }
}

fn digraph(a: &[Vec<u64>]) -> DiGraph<(), ()> {
    let mut g = DiGraph::new();
    let nodes: Vec<_> = (0..a.len()).map(|_| g.add_node(())).collect();
    for (i, r) in a.iter().enumerate() {
        for (j, x) in r.iter().enumerate() {
            if *x > 0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    g
}

/// Strong connectivity of the transition digraph; a 1×1 zero matrix is reducible.
pub fn is_irreducible(a: &[Vec<u64>]) -> bool {
    match a.len() {
        0 => false,
        1 => a[0][0] > 0,
        _ => tarjan_scc(&digraph(a)).len() == 1,
    }
}

/// Least `k` with `A^k > 0`, searched up to the Wielandt bound.
///
/// With no zero row, positivity of `A^k` persists to all larger `k`, so the
/// search doubles and then bisects over boolean matrix powers.
pub fn primitive_exponent(a: &[Vec<u64>]) -> Option<u32> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.iter().all(|x| *x == 0)) {
        return None;
    }
    let base = BoolMat::from_counts(a);
    let bound = (n - 1) * (n - 1) + 1;
    // powers[j] = A^(2^j)
    let mut powers = vec![base];
    while !powers.last().expect("nonempty").is_positive() {
        if 1usize << (powers.len() - 1) >= bound {
            return None;
        }
        let p = powers.last().expect("nonempty");
        powers.push(p.mul(p));
    }
    // Greatest k with A^k not positive, built bit by bit from the top.
    let mut k = 0usize;
    let mut acc: Option<BoolMat> = None;
    for j in (0..powers.len() - 1).rev() {
        let trial = match &acc {
            None => powers[j].clone(),
            Some(m) => m.mul(&powers[j]),
        };
        if !trial.is_positive() {
            k += 1 << j;
            acc = Some(trial);
        }
    }
    u32::try_from(k + 1).ok()
}

#[derive(Clone)]
struct BoolMat {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl BoolMat {
    fn from_counts(a: &[Vec<u64>]) -> Self {
        let n = a.len();
        let words = n.div_ceil(64);
        let rows = a
            .iter()
            .map(|r| {
                let mut b = vec![0u64; words];
                for (j, x) in r.iter().enumerate() {
                    if *x > 0 {
                        b[j / 64] |= 1 << (j % 64);
                    }
                }
                b
            })
            .collect();
        BoolMat { n, rows }
    }

    fn mul(&self, other: &BoolMat) -> BoolMat {
        let words = self.n.div_ceil(64);
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out = vec![0u64; words];
                for j in 0..self.n {
                    if r[j / 64] >> (j % 64) & 1 == 1 {
                        for (o, x) in out.iter_mut().zip(&other.rows[j]) {
                            *o |= x;
                        }
                    }
                }
                out
            })
            .collect();
        BoolMat { n: self.n, rows }
    }

    fn is_positive(&self) -> bool {
        self.rows.iter().all(|r| (0..self.n).all(|j| r[j / 64] >> (j % 64) & 1 == 1))
    }
}

/// Per row: whether the row sums of `A^n` are unbounded in `n`.
///
/// A row grows iff it reaches a strongly connected component with spectral
/// radius above one, or reaches two distinct cyclic components in sequence.
pub fn growth_unbounded(a: &[Vec<u64>]) -> Vec<bool> {
    let n = a.len();
    let g = digraph(a);
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; n];
    for (c, nodes) in sccs.iter().enumerate() {
        for v in nodes {
            comp[v.index()] = c;
        }
    }
    let k = sccs.len();
    let mut cyclic = vec![false; k];
    let mut expanding = vec![false; k];
    for (c, nodes) in sccs.iter().enumerate() {
        let members: BTreeSet<usize> = nodes.iter().map(|v| v.index()).collect();
        let internal: Vec<u64> = members.iter().map(|i| members.iter().map(|j| a[*i][*j]).sum()).collect();
        cyclic[c] = internal.iter().any(|x| *x > 0);
        // Irreducible integer matrices have spectral radius 1 only as permutations.
        expanding[c] = cyclic[c] && internal.iter().any(|x| *x > 1);
    }
    // tarjan_scc lists components in reverse topological order.
    let mut reaches_cyclic = vec![false; k];
    let mut grows = vec![false; k];
    for c in 0..k {
        let succ: BTreeSet<usize> = sccs[c]
            .iter()
            .flat_map(|v| (0..n).filter(move |j| a[v.index()][*j] > 0))
            .map(|j| comp[j])
            .filter(|d| *d != c)
            .collect();
        let below_cyclic = succ.iter().any(|d| reaches_cyclic[*d]);
        reaches_cyclic[c] = cyclic[c] || below_cyclic;
        grows[c] = expanding[c] || (cyclic[c] && below_cyclic) || succ.iter().any(|d| grows[*d]);
    }
    (0..n).map(|i| grows[comp[i]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rose2() -> Graph {
        let mut g = Graph::new();
        let v = g.add_vertex("v");
        g.add_edge("a", v, v);
        g.add_edge("b", v, v);
        g
    }

    #[test]
    fn swap_is_not_expanding() {
        let m = GraphMap::from_words(rose2(), &[("a", "b"), ("b", "a")]).unwrap();
        assert!(!m.is_expanding());
        let fib = GraphMap::from_words(rose2(), &[("a", "a b"), ("b", "a")]).unwrap();
        assert!(fib.is_expanding());
    }

    #[test]
    fn polynomial_growth_counts_as_unbounded() {
        let m = GraphMap::from_words(rose2(), &[("a", "a"), ("b", "b a")]).unwrap();
        assert_eq!(growth_unbounded(&m.transition_matrix()), vec![false, true]);
    }

    #[test]
    fn primitive_exponent_of_cycle_is_none() {
        assert_eq!(primitive_exponent(&[vec![0, 1], vec![1, 0]]), None);
        assert_eq!(primitive_exponent(&[vec![1, 1], vec![1, 0]]), Some(2));
    }
}
