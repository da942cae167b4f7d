// SPDX-License-Identifier: MIT OR Apache-2.0

//! Stallings folds of labeled graphs.
//!
//! [`build_delta`] subdivides the domain of a graph map so that each piece
//! maps to a single edge; [`fold_sequence`] folds it back onto the target
//! one pair of edges at a time. Stages are kept as views of the initial
//! graph: an edge alive at stage `i` is an edge of `Δ₀` that has not yet been
//! folded away, and vertices are tracked by representative.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{invalid, precondition, Result};
use crate::graph_core::{subdivide, EdgeId, Graph, VertexId};
use crate::graph_maps::GraphMap;
use crate::rational::{self, Q};

/// A graph with an edge and vertex labelling by a target graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub edge_label: Vec<EdgeId>,
    pub vertex_label: Vec<VertexId>,
}

impl LabeledGraph {
    pub fn identity(g: &Graph) -> Self {
        LabeledGraph {
            graph: g.clone(),
            edge_label: (0..g.num_oriented()).collect(),
            vertex_label: (0..g.num_vertices()).collect(),
        }
    }

    /// Checks compatibility of the labelling with `target`.
    pub fn check(&self, target: &Graph) -> Result<()> {
        let g = &self.graph;
        for e in 0..g.num_oriented() {
            let l = self.edge_label[e];
            if self.edge_label[g.inv[e]] != target.inv[l] {
                return invalid(format!("label of {} is not compatible with inversion", g.edge_names[e]));
            }
            if target.origin[l] != self.vertex_label[g.origin[e]] {
                return invalid(format!("label of {} does not match its origin", g.edge_names[e]));
            }
        }
        Ok(())
    }

    /// Every vertex has two incident edges with distinct labels.
    pub fn is_tame(&self) -> bool {
        (0..self.graph.num_vertices()).all(|v| {
            let labels: BTreeSet<EdgeId> = self.graph.link(v).iter().map(|e| self.edge_label[*e]).collect();
            labels.len() >= 2
        })
    }

    /// A pair of distinct edges with common origin and equal label, if any.
    pub fn foldable_pair(&self) -> Option<(EdgeId, EdgeId)> {
        for v in 0..self.graph.num_vertices() {
            let mut seen: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
            for e in self.graph.link(v) {
                if let Some(first) = seen.insert(self.edge_label[e], e) {
                    return Some((first, e));
                }
            }
        }
        None
    }

    pub fn is_folded(&self) -> bool {
        self.foldable_pair().is_none()
    }
}

/// The subdivided domain `Δ` with its labelling by the target.
#[derive(Clone, Debug, Serialize)]
pub struct Delta {
    pub labeled: LabeledGraph,
    /// For each oriented edge of the target, its pieces in `Δ` in order.
    pub pieces: Vec<Vec<EdgeId>>,
}

/// Subdivides each edge `e` into `|f(e)|` pieces labeled by the letters of
/// `f(e)`; piece lengths are the lengths of their labels.
pub fn build_delta(m: &GraphMap) -> Result<Delta> {
    m.require_regular()?;
    if !m.is_tame() {
        return precondition("map is not tame");
    }
    delta_unchecked(m)
}

fn delta_unchecked(m: &GraphMap) -> Result<Delta> {
    let g = &m.graph;
    let mut scaled = g.clone();
    let mut points = BTreeMap::new();
    for e in g.positive_edges() {
        let img = &m.edge_map[e];
        if img.is_empty() {
            return precondition(format!("image of {} is degenerate", g.edge_names[e]));
        }
        scaled.set_length(e, img.length(g));
        let mut acc = rational::zero();
        let mut cuts = Vec::new();
        for x in &img.edges[..img.len() - 1] {
            acc += g.length(*x);
            cuts.push(acc.clone());
        }
        if !cuts.is_empty() {
            points.insert(e, cuts);
        }
    }
    let sub = subdivide(&scaled, &points)?;
    let mut graph = sub.graph;
    let mut edge_label = vec![0; graph.num_oriented()];
    let mut vertex_label = vec![0; graph.num_vertices()];
    for v in 0..g.num_vertices() {
        vertex_label[sub.vertex_map[v]] = m.vertex_map[v];
    }
    for e in g.positive_edges() {
        let pieces = &sub.correspondence[e].edges;
        for (k, (p, l)) in pieces.iter().zip(&m.edge_map[e].edges).enumerate() {
            edge_label[*p] = *l;
            edge_label[graph.inv[*p]] = g.inv[*l];
            vertex_label[graph.terminus(*p)] = g.terminus(*l);
            graph.edge_names[*p] = format!("{}.{}", g.edge_names[e], k + 1);
            graph.edge_names[graph.inv[*p]] = format!("{}.{}^-1", g.edge_names[e], k + 1);
        }
    }
    let labeled = LabeledGraph { graph, edge_label, vertex_label };
    labeled.check(g)?;
    Ok(Delta { labeled, pieces: sub.correspondence.into_iter().map(|p| p.edges).collect() })
}

/// One combinatorial fold at `stage`: `e_prime` is identified with `e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fold {
    pub stage: usize,
    pub e: EdgeId,
    pub e_prime: EdgeId,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub length: Q,
    pub loop_swap_applied: bool,
}

/// Current stage of folding, as a view of `Δ₀`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldState {
    pub alive: Vec<bool>,
    /// Representative (least id) of each `Δ₀` vertex's class.
    pub vclass: Vec<VertexId>,
    /// Alive edge each `Δ₀` edge has been identified with.
    pub survivor: Vec<EdgeId>,
}

impl FoldState {
    fn new(g: &Graph) -> Self {
        FoldState {
            alive: vec![true; g.num_oriented()],
            vclass: (0..g.num_vertices()).collect(),
            survivor: (0..g.num_oriented()).collect(),
        }
    }

    pub fn origin(&self, g: &Graph, e: EdgeId) -> VertexId {
        self.vclass[g.origin[e]]
    }

    pub fn terminus(&self, g: &Graph, e: EdgeId) -> VertexId {
        self.vclass[g.terminus(e)]
    }

    pub fn is_loop(&self, g: &Graph, e: EdgeId) -> bool {
        self.origin(g, e) == self.terminus(g, e)
    }

    pub fn alive_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.alive.len()).filter(|e| self.alive[*e])
    }

    fn first_foldable(&self, lg: &LabeledGraph) -> Option<(EdgeId, EdgeId)> {
        let g = &lg.graph;
        let mut by_vertex: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
        for e in self.alive_edges() {
            by_vertex.entry(self.origin(g, e)).or_default().push(e);
        }
        for edges in by_vertex.values() {
            let mut best: Option<(EdgeId, EdgeId)> = None;
            for (i, a) in edges.iter().enumerate() {
                for b in &edges[i + 1..] {
                    if lg.edge_label[*a] == lg.edge_label[*b] && best.is_none_or(|p| (*a, *b) < p) {
                        best = Some((*a, *b));
                    }
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Removes `ep` and its inverse, merging `t(ep)` into `t(e)`.
    fn apply(&mut self, g: &Graph, e: EdgeId, ep: EdgeId) {
        let keep = self.terminus(g, e);
        let gone = self.terminus(g, ep);
        let rep = keep.min(gone);
        for c in self.vclass.iter_mut() {
            if *c == keep || *c == gone {
                *c = rep;
            }
        }
        self.alive[ep] = false;
        self.alive[g.inv[ep]] = false;
        for s in self.survivor.iter_mut() {
            if *s == ep {
                *s = e;
            } else if *s == g.inv[ep] {
                *s = g.inv[e];
            }
        }
    }

    /// Materializes the stage as a labeled graph; ids are renumbered.
    pub fn materialize(&self, lg: &LabeledGraph) -> LabeledGraph {
        let g = &lg.graph;
        let reps: BTreeSet<VertexId> = self.vclass.iter().copied().collect();
        let vindex: BTreeMap<VertexId, VertexId> = reps.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut h = Graph::new();
        h.lengths = Some(Vec::new());
        for v in &reps {
            h.add_vertex(g.vertex_names[*v].clone());
        }
        let mut edge_label = Vec::new();
        for e in self.alive_edges().filter(|e| g.positive[*e]) {
            let ne = h.add_edge(g.edge_names[e].clone(), vindex[&self.origin(g, e)], vindex[&self.terminus(g, e)]);
            h.set_length(ne, g.length(e));
            edge_label.push(lg.edge_label[e]);
            edge_label.push(lg.edge_label[g.inv[e]]);
        }
        let vertex_label = reps.iter().map(|v| lg.vertex_label[*v]).collect();
        LabeledGraph { graph: h, edge_label, vertex_label }
    }
}

/// A complete fold sequence `Δ = Δ₀, …, Δ_m ≅ Γ`.
#[derive(Clone, Debug)]
pub struct FoldSequence {
    pub delta: Delta,
    pub target: Graph,
    pub folds: Vec<Fold>,
    /// `0 = t₀ < … < t_m = 1`.
    pub times: Vec<Q>,
    pub total_length: Q,
    /// `states[i]` is stage `Δ_i`; there are `m + 1` of them.
    pub states: Vec<FoldState>,
}

impl FoldSequence {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn stage(&self, i: usize) -> LabeledGraph {
        self.states[i].materialize(&self.delta.labeled)
    }

    pub fn delta_graph(&self) -> &Graph {
        &self.delta.labeled.graph
    }

    pub fn report(&self) -> FoldReport {
        let g = self.delta_graph();
        FoldReport {
            stage_edges: self.states.iter().map(|s| s.alive_edges().count() / 2).collect(),
            stage_vertices: self.states.iter().map(|s| s.vclass.iter().collect::<BTreeSet<_>>().len()).collect(),
            folds: self
                .folds
                .iter()
                .map(|f| FoldLine {
                    e: g.edge_names[f.e].clone(),
                    e_prime: g.edge_names[f.e_prime].clone(),
                    length: rational::fmt(&f.length),
                    loop_swap_applied: f.loop_swap_applied,
                })
                .collect(),
            times: self.times.iter().map(rational::fmt).collect(),
            total_length: rational::fmt(&self.total_length),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldLine {
    pub e: String,
    pub e_prime: String,
    pub length: String,
    pub loop_swap_applied: bool,
}

/// JSON-facing summary of a fold sequence.
#[derive(Clone, Debug, Serialize)]
pub struct FoldReport {
    pub stage_edges: Vec<usize>,
    pub stage_vertices: Vec<usize>,
    pub folds: Vec<FoldLine>,
    pub times: Vec<String>,
    pub total_length: String,
}

/// Folds `Δ` completely with the deterministic rule: least vertex
/// representative first, then the lexicographically least pair of edge ids.
pub fn fold_sequence(delta: &Delta, target: &Graph) -> Result<FoldSequence> {
    run_folds(delta, target, |st, lg| Ok(st.first_foldable(lg)))
}

/// Folds `Δ` in a prescribed order of `Δ₀` edge pairs. Each edge of a pair
/// is resolved to its surviving representative at that stage.
pub fn fold_sequence_with_order(delta: &Delta, target: &Graph, order: &[(EdgeId, EdgeId)]) -> Result<FoldSequence> {
    let mut next = 0;
    let fs = run_folds(delta, target, |st, lg| {
        let Some((a, b)) = order.get(next) else { return Ok(None) };
        next += 1;
        let (a, b) = (st.survivor[*a], st.survivor[*b]);
        let g = &lg.graph;
        if a == b || st.origin(g, a) != st.origin(g, b) || lg.edge_label[a] != lg.edge_label[b] {
            return invalid(format!("prescribed fold {} / {} is not a fold", g.edge_names[a], g.edge_names[b]));
        }
        Ok(Some((a, b)))
    })?;
    Ok(fs)
}

fn run_folds(
    delta: &Delta,
    target: &Graph,
    mut choose: impl FnMut(&FoldState, &LabeledGraph) -> Result<Option<(EdgeId, EdgeId)>>,
) -> Result<FoldSequence> {
    let lg = &delta.labeled;
    let g = &lg.graph;
    let mut st = FoldState::new(g);
    let mut states = vec![st.clone()];
    let mut folds = Vec::new();
    while let Some((a, b)) = choose(&st, lg)? {
        let (mut e, mut ep) = (a, b);
        let mut swapped = false;
        if st.is_loop(g, e) {
            std::mem::swap(&mut e, &mut ep);
            swapped = true;
        }
        if st.terminus(g, e) == st.terminus(g, ep) {
            return invalid(format!(
                "fold of {} and {} has equal termini; the map is not a homotopy equivalence",
                g.edge_names[e], g.edge_names[ep]
            ));
        }
        folds.push(Fold { stage: folds.len(), e, e_prime: ep, length: g.length(e), loop_swap_applied: swapped });
        st.apply(g, e, ep);
        states.push(st.clone());
    }
    if let Some((a, b)) = st.first_foldable(lg) {
        return invalid(format!("sequence ends unfolded at {} / {}", g.edge_names[a], g.edge_names[b]));
    }
    let last = st.materialize(lg);
    if !labels_bijective(&last, target) {
        return invalid("folded graph is not the target; the map is not a homotopy equivalence");
    }
    let total_length: Q = folds.iter().map(|f| f.length.clone()).sum();
    let mut times = vec![rational::zero()];
    let mut acc = rational::zero();
    for f in &folds {
        acc += &f.length;
        times.push(&acc / &total_length);
    }
    Ok(FoldSequence { delta: delta.clone(), target: target.clone(), folds, times, total_length, states })
}

fn labels_bijective(lg: &LabeledGraph, target: &Graph) -> bool {
    let edges: BTreeSet<EdgeId> = lg.edge_label.iter().copied().collect();
    let verts: BTreeSet<VertexId> = lg.vertex_label.iter().copied().collect();
    lg.edge_label.len() == target.num_oriented()
        && edges.len() == target.num_oriented()
        && lg.vertex_label.len() == target.num_vertices()
        && verts.len() == target.num_vertices()
}

/// Decides whether a map with non-degenerate images is a homotopy
/// equivalence: every fold must join distinct vertices, and the core of the
/// folded graph must be the target.
pub fn is_homotopy_equivalence(m: &GraphMap) -> Result<bool> {
    let delta = delta_unchecked(m)?;
    let lg = &delta.labeled;
    let g = &lg.graph;
    let mut st = FoldState::new(g);
    while let Some((e, ep)) = st.first_foldable(lg) {
        if st.terminus(g, e) == st.terminus(g, ep) {
            return Ok(false);
        }
        st.apply(g, e, ep);
    }
    // Prune hanging trees.
    loop {
        let mut deg: BTreeMap<VertexId, usize> = BTreeMap::new();
        for e in st.alive_edges() {
            *deg.entry(st.origin(g, e)).or_default() += 1;
        }
        let Some(e) = st.alive_edges().find(|e| deg[&st.origin(g, *e)] == 1) else { break };
        st.alive[e] = false;
        st.alive[g.inv[e]] = false;
    }
    let used: BTreeSet<VertexId> = st.alive_edges().map(|e| st.origin(g, e)).collect();
    let core_vertices: BTreeSet<VertexId> = used.iter().map(|v| lg.vertex_label[*v]).collect();
    let labels: BTreeSet<EdgeId> = st.alive_edges().map(|e| lg.edge_label[e]).collect();
    let alive = st.alive_edges().count();
    Ok(alive == m.graph.num_oriented()
        && labels.len() == alive
        && used.len() == core_vertices.len()
        && core_vertices.len() == m.graph.num_vertices())
}
