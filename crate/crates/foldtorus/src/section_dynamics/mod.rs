// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross sections of the folded mapping torus dual to a positive class.
//!
//! An integral positive cocycle `z` on a complex with every trapezoid
//! unconstrained is realized by a height function: linear along each 1-cell
//! and, inside a trapezoid, linear along each vertical segment between the
//! bottom and the top. The section is the preimage of a generic level; its
//! first return map is traced band by band through the trapezoids.

mod pipeline;
mod trace;

pub use pipeline::{
    analyze_class, entropy_of_class, monodromy_certificates, stretch_factor, sweep, ClassOptions, ClassReport,
    Dynamics, MonodromyReport, SectionSummary, SweepRow,
};
pub use trace::{crossing_matrix, first_return, Closure, ImagePiece, ReturnMap, SectionPoint};

use std::collections::{BTreeMap, VecDeque};

use num_traits::Signed;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{internal, invalid, precondition, Result};
use crate::graph_core::Graph;
use crate::mapping_torus::{Trapezoid, TrapezoidComplex};
use crate::rational::{self, Q};

/// Lifted heights of the 0-cells and the base level.
#[derive(Clone, Debug, Serialize)]
pub struct HeightAssignment {
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub lift: Vec<Q>,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub x0: Q,
    pub tree: Vec<bool>,
}

/// Heights on one trapezoid in its own lifted frame.
pub(crate) struct Frame<'a> {
    pub t: &'a Trapezoid,
    z: &'a [Q],
    /// Height at the bottom of `ℓ₋`, the origin of the bottom cell.
    pub base: Q,
    bottom_z: Q,
    bottom_len: Q,
    left_top: Q,
    cum: Vec<Q>,
}

impl<'a> Frame<'a> {
    pub fn new(x: &TrapezoidComplex, t: &'a Trapezoid, z: &'a [Q], lift: &[Q]) -> Self {
        let bottom = &x.cells1[t.bottom];
        let base = lift[bottom.origin].clone();
        let bottom_z = z[t.bottom].clone();
        let bottom_len = bottom.param_len.clone();
        let hb0 = &base + &bottom_z * t.bottom_at(&rational::zero()) / &bottom_len;
        let left_top = hb0 + t.left.iter().map(|c| &z[*c]).sum::<Q>();
        let mut cum = vec![rational::zero()];
        for c in &t.top {
            let last = cum.last().expect("nonempty").clone();
            cum.push(last + &z[*c]);
        }
        Frame { t, z, base, bottom_z, bottom_len, left_top, cum }
    }

    pub fn hb(&self, w: &Q) -> Q {
        &self.base + &self.bottom_z * self.t.bottom_at(w) / &self.bottom_len
    }

    fn top_index(&self, w: &Q) -> usize {
        let b = &self.t.breaks;
        (0..self.t.top.len()).find(|i| w <= &b[i + 1]).unwrap_or(self.t.top.len() - 1)
    }

    pub fn ht(&self, w: &Q) -> Q {
        let i = self.top_index(w);
        let b = &self.t.breaks;
        &self.left_top + &self.cum[i] + &self.z[self.t.top[i]] * (w - &b[i]) / (&b[i + 1] - &b[i])
    }

    /// Width where the top reaches height `y`, for `y` in the top's range.
    pub fn ht_inv(&self, y: &Q) -> Q {
        let b = &self.t.breaks;
        for i in 0..self.t.top.len() {
            let lo = &self.left_top + &self.cum[i];
            let hi = &self.left_top + &self.cum[i + 1];
            if y <= &hi || i + 1 == self.t.top.len() {
                return &b[i] + (y - &lo) * (&b[i + 1] - &b[i]) / &self.z[self.t.top[i]];
            }
        }
        unreachable!("trapezoid has a top")
    }

    /// Width where the bottom reaches height `y`.
    pub fn hb_inv(&self, y: &Q) -> Q {
        let p = (y - &self.base) * &self.bottom_len / &self.bottom_z;
        (p - &self.t.bottom_alpha) / &self.t.bottom_beta
    }

    pub fn max(&self) -> Q {
        self.ht(&self.t.width)
    }
}

/// Where a level arc meets the boundary of its trapezoid.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Spot {
    Left,
    Right,
    Top(Q),
    Bottom(Q),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SectionVertex {
    pub cell: usize,
    /// The level is `x0 + level` in the lift of the cell's origin.
    pub level: i64,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub param: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SectionEdge {
    pub trapezoid: usize,
    /// Level `x0 + level` in the trapezoid's frame.
    pub level: i64,
    pub from: usize,
    pub to: usize,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub w_from: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub w_to: Q,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionGraph {
    pub vertices: Vec<SectionVertex>,
    pub edges: Vec<SectionEdge>,
    pub euler_characteristic: i64,
    pub components: usize,
    #[serde(skip)]
    pub graph: Graph,
    #[serde(skip)]
    pub(crate) edge_at: BTreeMap<(usize, i64), usize>,
}

impl SectionGraph {
    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Valence of every section vertex.
    pub fn valences(&self) -> Vec<usize> {
        let mut v = vec![0; self.vertices.len()];
        for e in &self.edges {
            v[e.from] += 1;
            v[e.to] += 1;
        }
        v
    }

    /// `val(y) = d(e)` at every section vertex.
    pub fn check_valence_law(&self, x: &TrapezoidComplex) -> bool {
        self.valences().iter().zip(&self.vertices).all(|(val, y)| *val == x.cells1[y.cell].degree)
    }
}

/// Tree potentials for an integral class and the generic base level.
pub fn heights(x: &TrapezoidComplex, z: &[Q]) -> Result<HeightAssignment> {
    if z.len() != x.cells1.len() || !x.is_cocycle(z) {
        return invalid("cochain is not a cocycle on this complex");
    }
    if !z.iter().all(|v| v.is_positive()) {
        return precondition("cocycle is not positive");
    }
    let nv = x.cells0.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, c) in x.cells1.iter().enumerate() {
        adj[c.origin].push(e);
        adj[c.terminus].push(e);
    }
    let mut lift: Vec<Option<Q>> = vec![None; nv];
    let mut tree = vec![false; x.cells1.len()];
    lift[0] = Some(rational::zero());
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let hv = lift[v].clone().expect("visited");
        for e in &adj[v] {
            let c = &x.cells1[*e];
            let (w, h) = if c.origin == v { (c.terminus, &hv + &z[*e]) } else { (c.origin, &hv - &z[*e]) };
            if lift[w].is_none() {
                lift[w] = Some(h);
                tree[*e] = true;
                queue.push_back(w);
            }
        }
    }
    let Some(lift) = lift.into_iter().collect::<Option<Vec<Q>>>() else {
        return invalid("the complex is not connected");
    };
    for (e, c) in x.cells1.iter().enumerate() {
        if !rational::is_integer(&(&lift[c.terminus] - &lift[c.origin] - &z[e])) {
            return invalid("the cocycle does not represent an integral class");
        }
    }
    let mut fr: Vec<Q> = lift.iter().map(rational::frac).collect();
    fr.sort();
    fr.dedup();
    let mut best: Option<(Q, Q)> = None;
    for i in 0..fr.len() {
        let lo = &fr[i];
        let hi = if i + 1 < fr.len() { fr[i + 1].clone() } else { &fr[0] + rational::one() };
        let gap = &hi - lo;
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((gap, rational::frac(&((lo + &hi) / rational::q(2)))));
        }
    }
    let x0 = best.expect("at least one 0-cell").1;
    let h = HeightAssignment { lift, x0, tree };
    for t in &x.trapezoids {
        let f = Frame::new(x, t, z, &h.lift);
        if f.hb(&t.width) + t.right.iter().map(|c| &z[*c]).sum::<Q>() != f.max() {
            return internal("trapezoid heights do not close up");
        }
        let mut ws: Vec<Q> = t.breaks.clone();
        ws.push(rational::zero());
        if ws.iter().any(|w| f.ht(w) < f.hb(w)) || (&f.ht(&t.width) - &f.hb(&t.width)).is_negative() {
            return precondition("a trapezoid is constrained by the cocycle");
        }
    }
    Ok(h)
}

fn integer(q: &Q) -> Result<i64> {
    if !rational::is_integer(q) {
        return internal("level offset is not an integer");
    }
    i64::try_from(q.to_integer()).or_else(|_| internal("level offset out of range"))
}

/// Level crossings of every 1-cell, and the level arcs of every trapezoid.
pub fn build_section(x: &TrapezoidComplex, z: &[Q], h: &HeightAssignment) -> Result<SectionGraph> {
    let x0 = &h.x0;
    let mut vertices = Vec::new();
    let mut vertex_at: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    for (e, c) in x.cells1.iter().enumerate() {
        let lo = &h.lift[c.origin];
        let hi = lo + &z[e];
        let k_min = integer(&Q::from_integer(rational::floor(&(lo - x0)))).map(|k| k + 1)?;
        let k_max = integer(&Q::from_integer(rational::floor(&(&hi - x0))))?;
        for k in k_min..=k_max {
            let y = x0 + rational::q(k);
            if y == hi {
                return internal("base level is not generic");
            }
            let param = &c.param_len * (&y - lo) / &z[e];
            vertex_at.insert((e, k), vertices.len());
            vertices.push(SectionVertex { cell: e, level: k, param });
        }
    }
    let mut edges = Vec::new();
    let mut edge_at = BTreeMap::new();
    for (ti, t) in x.trapezoids.iter().enumerate() {
        let f = Frame::new(x, t, z, &h.lift);
        let k_min = integer(&Q::from_integer(rational::floor(&(&f.base - x0))))? + 1;
        let k_max = integer(&Q::from_integer(rational::floor(&(f.max() - x0))))?;
        for k in k_min..=k_max {
            let y = x0 + rational::q(k);
            let (l, r) = arc_ends(&f, &y);
            let wl = spot_w(t, &l);
            let wr = spot_w(t, &r);
            let from = locate(x, z, h, &f, &l, &y, &vertex_at)?;
            let to = locate(x, z, h, &f, &r, &y, &vertex_at)?;
            edge_at.insert((ti, k), edges.len());
            edges.push(SectionEdge { trapezoid: ti, level: k, from, to, w_from: wl, w_to: wr });
        }
    }
    let mut graph = Graph::new();
    for i in 0..vertices.len() {
        graph.add_vertex(format!("y{i}"));
    }
    for (i, e) in edges.iter().enumerate() {
        graph.add_edge(format!("s{i}"), e.from, e.to);
    }
    let mut uf = UnionFind::<usize>::new(vertices.len());
    for e in &edges {
        uf.union(e.from, e.to);
    }
    let components = (0..vertices.len()).filter(|v| uf.find(*v) == *v).count();
    Ok(SectionGraph {
        euler_characteristic: vertices.len() as i64 - edges.len() as i64,
        vertices,
        edges,
        components,
        graph,
        edge_at,
    })
}

/// End points of the level arc at height `y`, in increasing width.
fn arc_ends(f: &Frame, y: &Q) -> (Spot, Spot) {
    let t = f.t;
    let zero = rational::zero();
    if t.zeta > 0 {
        let left = if y > &f.ht(&zero) { Spot::Top(f.ht_inv(y)) } else { Spot::Left };
        let right = if y < &f.hb(&t.width) { Spot::Bottom(f.hb_inv(y)) } else { Spot::Right };
        (left, right)
    } else {
        let left = if y < &f.hb(&zero) {
            Spot::Bottom(f.hb_inv(y))
        } else if y > &f.ht(&zero) {
            Spot::Top(f.ht_inv(y))
        } else {
            Spot::Left
        };
        (left, Spot::Right)
    }
}

fn spot_w(t: &Trapezoid, s: &Spot) -> Q {
    match s {
        Spot::Left => rational::zero(),
        Spot::Right => t.width.clone(),
        Spot::Top(w) | Spot::Bottom(w) => w.clone(),
    }
}

/// The section vertex at a boundary spot of a trapezoid at frame height `y`.
fn locate(
    x: &TrapezoidComplex,
    z: &[Q],
    h: &HeightAssignment,
    f: &Frame,
    s: &Spot,
    y: &Q,
    vertex_at: &BTreeMap<(usize, i64), usize>,
) -> Result<usize> {
    let t = f.t;
    let (cell, start) = match s {
        Spot::Bottom(_) => (t.bottom, f.base.clone()),
        Spot::Top(w) => {
            let i = f.top_index(w);
            (t.top[i], f.ht(&t.breaks[i]))
        }
        Spot::Left | Spot::Right => {
            let (chain, mut hgt) =
                if *s == Spot::Left { (&t.left, f.hb(&rational::zero())) } else { (&t.right, f.hb(&t.width)) };
            let mut found = None;
            for c in chain.iter() {
                let next = &hgt + &z[*c];
                if &hgt < y && y < &next {
                    found = Some((*c, hgt.clone()));
                    break;
                }
                hgt = next;
            }
            let Some(found) = found else { return internal("level arc misses its side") };
            found
        }
    };
    let shift = integer(&(&start - &h.lift[x.cells1[cell].origin]))?;
    let k = integer(&(y - &h.x0))? - shift;
    vertex_at
        .get(&(cell, k))
        .copied()
        .ok_or_else(|| crate::Error::Internal("no section vertex at a level arc end".into()))
}

impl SectionGraph {
    pub(crate) fn edge_of(&self, t: usize, k: i64) -> Option<usize> {
        self.edge_at.get(&(t, k)).copied()
    }
}
