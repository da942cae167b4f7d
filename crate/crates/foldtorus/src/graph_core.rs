// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finite graphs with an orientation-reversing involution on edges,
//! combinatorial edge-paths, turns, subdivision and rational lengths.
//!
//! Oriented edges are dense indices. Graphs built through [`Graph::add_edge`]
//! store an edge and its inverse at `2k` and `2k + 1`; raw graphs may carry an
//! arbitrary involution, which is what [`validate`] inspects.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rational::{one, zero, Q};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Graph {
    pub vertex_names: Vec<String>,
    /// Name of every oriented edge; inverses of declared edges are `name^-1`.
    pub edge_names: Vec<String>,
    pub origin: Vec<VertexId>,
    pub inv: Vec<EdgeId>,
    /// Membership in the declared orientation class E₊.
    pub positive: Vec<bool>,
    /// Length per oriented edge, `None` for the simplicial metric.
    #[serde(skip)]
    pub lengths: Option<Vec<Q>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            vertex_names: Vec::new(),
            edge_names: Vec::new(),
            origin: Vec::new(),
            inv: Vec::new(),
            positive: Vec::new(),
            lengths: None,
        }
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> VertexId {
        self.vertex_names.push(name.into());
        self.vertex_names.len() - 1
    }

    /// Adds a declared edge `o -> t` and its inverse; returns the declared id.
    pub fn add_edge(&mut self, name: impl Into<String>, o: VertexId, t: VertexId) -> EdgeId {
        let name = name.into();
        let e = self.edge_names.len();
        self.edge_names.push(name.clone());
        self.edge_names.push(format!("{name}^-1"));
        self.origin.push(o);
        self.origin.push(t);
        self.inv.push(e + 1);
        self.inv.push(e);
        self.positive.push(true);
        self.positive.push(false);
        if let Some(l) = self.lengths.as_mut() {
            l.push(one());
            l.push(one());
        }
        e
    }

    pub fn set_length(&mut self, e: EdgeId, len: Q) {
        let n = self.edge_names.len();
        let l = self.lengths.get_or_insert_with(|| vec![one(); n]);
        let ei = self.inv[e];
        l[e] = len.clone();
        l[ei] = len;
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_oriented(&self) -> usize {
        self.edge_names.len()
    }

    /// Number of topological (unoriented) edges.
    pub fn num_edges(&self) -> usize {
        self.positive.iter().filter(|p| **p).count()
    }

    pub fn positive_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.num_oriented()).filter(move |e| self.positive[*e])
    }

    pub fn terminus(&self, e: EdgeId) -> VertexId {
        self.origin[self.inv[e]]
    }

    pub fn is_loop(&self, e: EdgeId) -> bool {
        self.origin[e] == self.terminus(e)
    }

    /// The declared representative of `e`'s topological edge.
    pub fn unoriented(&self, e: EdgeId) -> EdgeId {
        if self.positive[e] {
            e
        } else {
            self.inv[e]
        }
    }

    pub fn length(&self, e: EdgeId) -> Q {
        match &self.lengths {
            Some(l) => l[e].clone(),
            None => one(),
        }
    }

    pub fn total_length(&self) -> Q {
        self.positive_edges().fold(zero(), |acc, e| acc + self.length(e))
    }

    /// Oriented edges with origin `v`; a loop contributes both orientations.
    pub fn link(&self, v: VertexId) -> Vec<EdgeId> {
        (0..self.num_oriented()).filter(|e| self.origin[*e] == v).collect()
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.origin.iter().filter(|o| **o == v).count()
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name)
    }

    /// Looks up `a` or `a^-1`.
    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edge_names.iter().position(|n| n == name)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64
    }

    pub fn component_count(&self) -> usize {
        let n = self.num_vertices();
        if n == 0 {
            return 0;
        }
        let mut uf = UnionFind::<usize>::new(n);
        for e in 0..self.num_oriented() {
            uf.union(self.origin[e], self.terminus(e));
        }
        let mut roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn connected(&self) -> bool {
        self.component_count() <= 1
    }

    pub fn word(&self, p: &EdgePath) -> String {
        p.edges.iter().map(|e| self.edge_names[*e].as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

/// An invariant violation found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    InvolutionFixedPoint(EdgeId),
    InvolutionNotInvolutive(EdgeId),
    BadOrigin(EdgeId),
    NonPositiveLength(EdgeId),
    AsymmetricLength(EdgeId),
    OrientationClass(EdgeId),
    ArrayMismatch,
}

/// Lists every invariant violation; an empty list means the graph is valid.
pub fn validate(g: &Graph) -> Vec<Violation> {
    let n = g.edge_names.len();
    let mut out = Vec::new();
    if g.origin.len() != n || g.inv.len() != n || g.positive.len() != n {
        return vec![Violation::ArrayMismatch];
    }
    if let Some(l) = &g.lengths {
        if l.len() != n {
            return vec![Violation::ArrayMismatch];
        }
    }
    for e in 0..n {
        let ei = g.inv[e];
        if ei >= n {
            out.push(Violation::InvolutionNotInvolutive(e));
            continue;
        }
        if ei == e {
            out.push(Violation::InvolutionFixedPoint(e));
            continue;
        }
        if g.inv[ei] != e {
            out.push(Violation::InvolutionNotInvolutive(e));
            continue;
        }
        if g.origin[e] >= g.num_vertices() {
            out.push(Violation::BadOrigin(e));
        }
        if g.positive[e] == g.positive[ei] {
            out.push(Violation::OrientationClass(e));
        }
        if let Some(l) = &g.lengths {
            if l[e] <= zero() {
                out.push(Violation::NonPositiveLength(e));
            }
            if l[e] != l[ei] {
                out.push(Violation::AsymmetricLength(e));
            }
        }
    }
    out
}

/// A combinatorial edge-path; the empty path sits at `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgePath {
    pub start: VertexId,
    pub edges: Vec<EdgeId>,
}

impl EdgePath {
    pub fn trivial(v: VertexId) -> Self {
        EdgePath { start: v, edges: Vec::new() }
    }

    pub fn edge(g: &Graph, e: EdgeId) -> Self {
        EdgePath { start: g.origin[e], edges: vec![e] }
    }

    /// Builds a path from a non-empty edge list, checking composability.
    pub fn from_edges(g: &Graph, edges: Vec<EdgeId>) -> Result<Self> {
        if edges.is_empty() {
            return invalid("empty edge list without a basepoint");
        }
        let p = EdgePath { start: g.origin[edges[0]], edges };
        p.check(g)?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self, g: &Graph) -> VertexId {
        match self.edges.last() {
            Some(e) => g.terminus(*e),
            None => self.start,
        }
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        let mut at = self.start;
        for (i, e) in self.edges.iter().enumerate() {
            if *e >= g.num_oriented() {
                return invalid(format!("unknown edge id {e}"));
            }
            if g.origin[*e] != at {
                return invalid(format!(
                    "edges do not compose at position {i}: {} does not start at {}",
                    g.edge_names[*e], g.vertex_names[at]
                ));
            }
            at = g.terminus(*e);
        }
        Ok(())
    }

    pub fn inverse(&self, g: &Graph) -> Self {
        EdgePath { start: self.end(g), edges: self.edges.iter().rev().map(|e| g.inv[*e]).collect() }
    }

    pub fn concat(&self, g: &Graph, other: &EdgePath) -> Result<Self> {
        if self.end(g) != other.start {
            return invalid("paths do not compose");
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(EdgePath { start: self.start, edges })
    }

    pub fn is_tight(&self, g: &Graph) -> bool {
        self.edges.windows(2).all(|w| w[1] != g.inv[w[0]])
    }

    /// Free reduction: removes every backtrack `e e^-1`.
    pub fn tighten(&self, g: &Graph) -> Result<Self> {
        self.check(g)?;
        let mut stack: Vec<EdgeId> = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if stack.last() == Some(&g.inv[*e]) {
                stack.pop();
            } else {
                stack.push(*e);
            }
        }
        Ok(EdgePath { start: self.start, edges: stack })
    }

    /// Turns `{e_{i-1}^-1, e_i}` contained in the path.
    pub fn turns(&self, g: &Graph) -> Vec<Turn> {
        self.edges.windows(2).map(|w| Turn::new(g.inv[w[0]], w[1])).collect()
    }

    /// Metric length of the path.
    pub fn length(&self, g: &Graph) -> Q {
        self.edges.iter().fold(zero(), |acc, e| acc + g.length(*e))
    }
}

/// Unordered pair of oriented edges with common origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Turn(pub EdgeId, pub EdgeId);

impl Turn {
    pub fn new(a: EdgeId, b: EdgeId) -> Self {
        if a <= b {
            Turn(a, b)
        } else {
            Turn(b, a)
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.0 == self.1
    }
}

/// Result of [`subdivide`].
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: Graph,
    /// For every oriented edge of the old graph, the path of its pieces.
    pub correspondence: Vec<EdgePath>,
    /// New vertex ids of the old vertices.
    pub vertex_map: Vec<VertexId>,
}

/// Subdivides the edges of `g` at the given interior positions.
///
/// Positions are measured along the orientation used as the key, and the
/// key may name either orientation of an edge, but not both.
pub fn subdivide(g: &Graph, points: &BTreeMap<EdgeId, Vec<Q>>) -> Result<Subdivision> {
    let mut cuts: BTreeMap<EdgeId, Vec<Q>> = BTreeMap::new();
    for (e, pos) in points {
        if *e >= g.num_oriented() {
            return invalid(format!("unknown edge id {e}"));
        }
        let len = g.length(*e);
        for w in pos.windows(2) {
            if w[0] == w[1] {
                return invalid(format!("duplicate position on {}", g.edge_names[*e]));
            }
            if w[0] > w[1] {
                return invalid(format!("positions not increasing on {}", g.edge_names[*e]));
            }
        }
        for p in pos {
            if *p <= zero() || *p >= len {
                return invalid(format!("position {} outside (0, {}) on {}", p, len, g.edge_names[*e]));
            }
        }
        let key = g.unoriented(*e);
        let along: Vec<Q> = if key == *e { pos.clone() } else { pos.iter().rev().map(|p| &len - p).collect() };
        if cuts.insert(key, along).is_some() {
            return invalid(format!("both orientations of {} given", g.edge_names[key]));
        }
    }
    let mut h = Graph::new();
    h.lengths = Some(Vec::new());
    let vertex_map: Vec<VertexId> = g.vertex_names.iter().map(|n| h.add_vertex(n.clone())).collect();
    let mut correspondence = vec![EdgePath::trivial(0); g.num_oriented()];
    for e in g.positive_edges() {
        let len = g.length(e);
        let cut = cuts.get(&e).cloned().unwrap_or_default();
        let mut bounds = vec![zero()];
        bounds.extend(cut.iter().cloned());
        bounds.push(len.clone());
        let mut verts = vec![vertex_map[g.origin[e]]];
        for (i, _) in cut.iter().enumerate() {
            verts.push(h.add_vertex(format!("{}#{}", g.edge_names[e], i + 1)));
        }
        verts.push(vertex_map[g.terminus(e)]);
        let pieces = bounds.len() - 1;
        let mut path = Vec::with_capacity(pieces);
        for i in 0..pieces {
            let name = if pieces == 1 { g.edge_names[e].clone() } else { format!("{}.{}", g.edge_names[e], i + 1) };
            let ne = h.add_edge(name, verts[i], verts[i + 1]);
            h.set_length(ne, &bounds[i + 1] - &bounds[i]);
            path.push(ne);
        }
        let fwd = EdgePath { start: vertex_map[g.origin[e]], edges: path };
        correspondence[g.inv[e]] = fwd.inverse(&h);
        correspondence[e] = fwd;
    }
    Ok(Subdivision { graph: h, correspondence, vertex_map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    fn theta() -> Graph {
        let mut g = Graph::new();
        let l = g.add_vertex("L");
        let r = g.add_vertex("R");
        g.add_edge("a", l, r);
        g.add_edge("b", l, r);
        g.add_edge("c", r, r);
        g.add_edge("d", l, r);
        g
    }

    #[test]
    fn running_graph_is_valid() {
        let g = theta();
        assert!(validate(&g).is_empty());
        assert_eq!(g.euler_characteristic(), -2);
        assert!(g.connected());
    }

    #[test]
    fn fixed_point_involution_reported() {
        let mut g = theta();
        g.inv[0] = 0;
        assert!(validate(&g).contains(&Violation::InvolutionFixedPoint(0)));
    }

    #[test]
    fn single_vertex_valid() {
        let mut g = Graph::new();
        g.add_vertex("v");
        assert!(validate(&g).is_empty());
        assert_eq!(g.euler_characteristic(), 1);
    }

    #[test]
    fn tighten_examples() {
        let g = theta();
        let a = g.edge_by_name("a").unwrap();
        let d = g.edge_by_name("d").unwrap();
        let p = EdgePath::from_edges(&g, vec![a, g.inv[a], d]).unwrap();
        assert_eq!(p.tighten(&g).unwrap().edges, vec![d]);
        let p = EdgePath::from_edges(&g, vec![a, g.inv[a]]).unwrap();
        let t = p.tighten(&g).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.start, g.origin[a]);
    }

    #[test]
    fn non_composable_rejected() {
        let g = theta();
        let a = g.edge_by_name("a").unwrap();
        assert!(EdgePath::from_edges(&g, vec![a, a]).is_err());
    }

    #[test]
    fn subdivide_halves() {
        let g = theta();
        let d = g.edge_by_name("d").unwrap();
        let mut pts = BTreeMap::new();
        pts.insert(d, vec![qr(1, 2)]);
        let s = subdivide(&g, &pts).unwrap();
        assert_eq!(s.graph.num_edges(), 5);
        let path = &s.correspondence[d];
        assert_eq!(path.len(), 2);
        for e in &path.edges {
            assert_eq!(s.graph.length(*e), qr(1, 2));
        }
        assert_eq!(s.graph.euler_characteristic(), g.euler_characteristic());
    }

    #[test]
    fn subdivide_rejects_bad_positions() {
        let g = theta();
        let d = g.edge_by_name("d").unwrap();
        let mut pts = BTreeMap::new();
        pts.insert(d, vec![qr(3, 2)]);
        assert!(subdivide(&g, &pts).is_err());
        pts.insert(d, vec![qr(1, 3), qr(1, 3)]);
        assert!(subdivide(&g, &pts).is_err());
    }
}
