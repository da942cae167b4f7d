// SPDX-License-Identifier: MIT OR Apache-2.0

//! The folded mapping torus as a complex of trapezoids.
//!
//! Points of the torus are handled exactly as [`FlowPoint`]s: a time in
//! `[0, 1)` and a point of the fiber graph at that time, written in the
//! coordinates of the fold stage that time belongs to. The semiflow moves a
//! point through the stages and, at time one, back to the subdivided graph.
//!
//! Each skew cell (one per fold, plus a diagonal in every strip that no fold
//! touches) has one or two trapezoids below it, found by sweeping down until
//! the flow lines meet the next skew cell.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{internal, precondition, Result};
use crate::folding::FoldSequence;
use crate::graph_core::{EdgeId, Graph, VertexId};
use crate::graph_maps::GraphMap;
use crate::linalg;
use crate::rational::{self, q, Q};

/// A point of a fiber graph. Vertices are stage representatives; edge
/// points use a positive `Δ₀` edge alive at that stage and an interior position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fiber {
    Vertex(VertexId),
    Edge(EdgeId, Q),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowPoint {
    pub time: Q,
    pub fiber: Fiber,
}

/// The skew cells of the old cell structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum OldSkew {
    Fold(usize),
    Diagonal(EdgeId),
}

/// Exact model of the semiflow on the folded mapping torus.
#[derive(Clone, Debug)]
pub struct FlowModel {
    pub fs: FoldSequence,
    pub gamma: Graph,
    /// `𝓛(f(g))` per oriented edge of the target.
    image_len: Vec<Q>,
    /// Per oriented `Δ₀` edge: the target edge it subdivides (same
    /// orientation) and its offset along it.
    piece_of: Vec<(EdgeId, Q)>,
    /// Alive oriented edge at the last stage carrying each target label.
    last_edge: Vec<EdgeId>,
    /// Positive `Δ₀` edges never involved in a fold.
    pub diagonal: Vec<bool>,
}

impl FlowModel {
    pub fn new(m: &GraphMap, fs: &FoldSequence) -> Result<Self> {
        if fs.is_empty() {
            return precondition("the fold sequence is empty; the torus needs at least one fold");
        }
        let gamma = m.graph.clone();
        let d = fs.delta_graph();
        let image_len = (0..gamma.num_oriented()).map(|e| m.edge_map[e].length(&gamma)).collect();
        let mut piece_of = vec![(0, rational::zero()); d.num_oriented()];
        for g in gamma.positive_edges() {
            let mut off = rational::zero();
            for y in &fs.delta.pieces[g] {
                piece_of[*y] = (g, off.clone());
                off += d.length(*y);
            }
            let total = off;
            for y in &fs.delta.pieces[g] {
                let (_, o) = piece_of[*y].clone();
                piece_of[d.inv[*y]] = (gamma.inv[g], &total - &o - d.length(*y));
            }
        }
        let last = fs.states.last().expect("at least one stage");
        let mut last_edge = vec![usize::MAX; gamma.num_oriented()];
        for x in last.alive_edges() {
            last_edge[fs.delta.labeled.edge_label[x]] = x;
        }
        if last_edge.contains(&usize::MAX) {
            return internal("last stage does not cover every target edge");
        }
        let mut touched = vec![false; d.num_oriented()];
        for (j, f) in fs.folds.iter().enumerate() {
            for y in 0..d.num_oriented() {
                let s = d.unoriented(fs.states[j].survivor[y]);
                if s == d.unoriented(f.e) || s == d.unoriented(f.e_prime) {
                    touched[d.unoriented(y)] = true;
                }
            }
        }
        let diagonal = (0..d.num_oriented()).map(|y| d.positive[y] && !touched[y]).collect();
        Ok(FlowModel { fs: fs.clone(), gamma, image_len, piece_of, last_edge, diagonal })
    }

    fn d(&self) -> &Graph {
        self.fs.delta_graph()
    }

    pub fn m(&self) -> usize {
        self.fs.len()
    }

    pub fn time(&self, j: usize) -> &Q {
        &self.fs.times[j]
    }

    /// Fold length normaliser `L`.
    pub fn big_l(&self) -> &Q {
        &self.fs.total_length
    }

    /// Stage whose block contains time `t ∈ [0, 1)`.
    pub fn stage_of(&self, t: &Q) -> usize {
        (0..self.m()).rev().find(|j| self.time(*j) <= t).unwrap_or(0)
    }

    /// Canonical fiber point at time `t` in block `j` for oriented edge `x`, position `p`.
    pub fn canon(&self, j: usize, t: &Q, x: EdgeId, p: Q) -> Fiber {
        let d = self.d();
        let st = &self.fs.states[j];
        let len = d.length(x);
        if p.is_zero() {
            return Fiber::Vertex(st.origin(d, x));
        }
        if p == len {
            return Fiber::Vertex(st.terminus(d, x));
        }
        let f = &self.fs.folds[j];
        let folded = (t - self.time(j)) * self.big_l();
        let (mut x, mut p) = (x, p);
        if x == f.e_prime || x == d.inv[f.e_prime] {
            let along = if x == f.e_prime { p.clone() } else { &len - &p };
            if along <= folded {
                x = f.e;
                p = along;
            }
        }
        if !d.positive[x] {
            p = d.length(x) - p;
            x = d.inv[x];
        }
        Fiber::Edge(x, p)
    }

    /// Pushes a stage-`j` fiber point across time `t_{j+1}`.
    fn advance(&self, j: usize, fiber: &Fiber) -> FlowPoint {
        let d = self.d();
        let next = &self.fs.states[j + 1];
        let moved = match fiber {
            Fiber::Vertex(v) => Fiber::Vertex(next.vclass[*v]),
            Fiber::Edge(x, p) => {
                let s = next.survivor[*x];
                if d.positive[s] {
                    Fiber::Edge(s, p.clone())
                } else {
                    Fiber::Edge(d.inv[s], d.length(s) - p)
                }
            }
        };
        if j + 1 == self.m() {
            FlowPoint { time: rational::zero(), fiber: self.glue(&moved) }
        } else {
            let t = self.time(j + 1).clone();
            let fiber = match moved {
                Fiber::Edge(x, p) => self.canon(j + 1, &t, x, p),
                v => v,
            };
            FlowPoint { time: t, fiber }
        }
    }

    /// Identifies the last stage with the target and the target with `Δ₀`.
    fn glue(&self, fiber: &Fiber) -> Fiber {
        let lg = &self.fs.delta.labeled;
        match fiber {
            Fiber::Vertex(v) => Fiber::Vertex(self.fs.states[0].vclass[lg.vertex_label[*v]]),
            Fiber::Edge(x, u) => {
                let g = lg.edge_label[*x];
                self.gamma_point(g, u)
            }
        }
    }

    /// Point at position `u` along target edge `g`, in `Δ₀` coordinates.
    pub fn gamma_point(&self, g: EdgeId, u: &Q) -> Fiber {
        let gamma = &self.gamma;
        let (g, u) = if gamma.positive[g] { (g, u.clone()) } else { (gamma.inv[g], gamma.length(g) - u) };
        let pos = u * &self.image_len[g] / gamma.length(g);
        let d = self.d();
        for y in &self.fs.delta.pieces[g] {
            let off = &self.piece_of[*y].1;
            let end = off + d.length(*y);
            if pos <= end {
                return self.canon(0, &rational::zero(), *y, &pos - off);
            }
        }
        unreachable!("position inside the subdivided edge")
    }

    /// The semiflow for time `delta >= 0`.
    pub fn flow(&self, p: &FlowPoint, delta: &Q) -> FlowPoint {
        let mut cur = p.clone();
        let mut left = delta.clone();
        loop {
            let j = self.stage_of(&cur.time);
            let end = if j + 1 == self.m() { rational::one() } else { self.time(j + 1).clone() };
            let reach = &cur.time + &left;
            if reach < end {
                let fiber = match &cur.fiber {
                    Fiber::Edge(x, pos) => self.canon(j, &reach, *x, pos.clone()),
                    v => v.clone(),
                };
                return FlowPoint { time: reach, fiber };
            }
            left -= &end - &cur.time;
            cur = self.advance(j, &cur.fiber);
        }
    }

    pub fn skew_len(&self, s: &OldSkew) -> Q {
        match s {
            OldSkew::Fold(j) => self.fs.folds[*j].length.clone(),
            OldSkew::Diagonal(y) => self.d().length(*y),
        }
    }

    /// Unwrapped time of the point at parameter `s` on an old skew cell.
    pub fn skew_time(&self, k: &OldSkew, s: &Q) -> Q {
        match k {
            OldSkew::Fold(j) => self.time(*j) + s / self.big_l(),
            OldSkew::Diagonal(y) => s * self.time(1) / self.d().length(*y),
        }
    }

    pub fn skew_point(&self, k: &OldSkew, s: &Q) -> FlowPoint {
        let d = self.d();
        let (j, x) = match k {
            OldSkew::Fold(j) => (*j, self.fs.folds[*j].e),
            OldSkew::Diagonal(y) => (0, *y),
        };
        if s < &self.skew_len(k) {
            let t = self.skew_time(k, s);
            FlowPoint { fiber: self.canon(j, &t, x, s.clone()), time: t }
        } else {
            let st = &self.fs.states[j];
            self.advance(j, &Fiber::Vertex(st.terminus(d, x)))
        }
    }

    /// Valence of a fiber point in the fiber graph at its time.
    pub fn valence(&self, p: &FlowPoint) -> usize {
        let d = self.d();
        let j = self.stage_of(&p.time);
        let st = &self.fs.states[j];
        let f = &self.fs.folds[j];
        match &p.fiber {
            Fiber::Vertex(v) => {
                let mut val = st.alive_edges().filter(|e| st.origin(d, *e) == *v).count();
                if p.time > *self.time(j) && st.origin(d, f.e) == *v {
                    val -= 1;
                }
                val
            }
            Fiber::Edge(x, pos) => {
                let folded = (&p.time - self.time(j)) * self.big_l();
                let on_fold = d.unoriented(f.e) == *x
                    && (if d.positive[f.e] { pos.clone() } else { d.length(*x) - pos }) == folded;
                if on_fold {
                    3
                } else {
                    2
                }
            }
        }
    }

    pub fn describe(&self, p: &FlowPoint) -> String {
        let d = self.d();
        let at = match &p.fiber {
            Fiber::Vertex(v) => d.vertex_names[*v].clone(),
            Fiber::Edge(x, pos) => format!("{}@{}", d.edge_names[*x], rational::fmt(pos)),
        };
        format!("{}|t={}", at, rational::fmt(&p.time))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Vertical,
    Skew,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell0 {
    pub label: String,
    /// Time coordinate in `[0, 1)`, when known.
    #[serde(serialize_with = "crate::report::ser_opt_q")]
    pub height: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cell1 {
    pub kind: CellKind,
    pub origin: usize,
    pub terminus: usize,
    pub degree: usize,
    /// Value of the canonical cocycle: the time elapsed along the cell.
    #[serde(serialize_with = "crate::report::ser_q")]
    pub span: Q,
    /// Length of the parameter interval of a skew cell; equals `span` for verticals.
    #[serde(serialize_with = "crate::report::ser_q")]
    pub param_len: Q,
    pub label: String,
}

/// A trapezoid in width coordinates `w ∈ [0, width]`.
///
/// The top is a chain of skew cells whose parameters increase with `w`:
/// `top[i]` covers `[breaks[i], breaks[i+1]]` with parameter `w - breaks[i]`.
/// The bottom cell has parameter `bottom_alpha + bottom_beta * w`. Sides are
/// vertical chains listed upwards: `left` at `w = 0`, `right` at `w = width`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trapezoid {
    #[serde(serialize_with = "crate::report::ser_q")]
    pub width: Q,
    pub bottom: usize,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub bottom_alpha: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub bottom_beta: Q,
    pub top: Vec<usize>,
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub breaks: Vec<Q>,
    pub zeta: i8,
    /// Flow time from bottom to top at width `w` is `flow_base + flow_slope * w`.
    #[serde(serialize_with = "crate::report::ser_q")]
    pub flow_base: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub flow_slope: Q,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub provenance: String,
}

impl Trapezoid {
    /// The side `ℓ₋`: at `w = 0` when `ζ = +1`, else at `w = width`.
    pub fn minus_side(&self) -> &[usize] {
        if self.zeta > 0 {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn plus_side(&self) -> &[usize] {
        if self.zeta > 0 {
            &self.right
        } else {
            &self.left
        }
    }

    pub fn flow_time(&self, w: &Q) -> Q {
        &self.flow_base + &self.flow_slope * w
    }

    pub fn is_degenerate(&self) -> bool {
        self.left.is_empty() || self.right.is_empty()
    }

    /// Bottom parameter at width `w`.
    pub fn bottom_at(&self, w: &Q) -> Q {
        &self.bottom_alpha + &self.bottom_beta * w
    }

    /// Boundary chain `e₋ + ℓ₊ − ζ·Σ top − ℓ₋`.
    pub fn boundary(&self) -> BTreeMap<usize, i64> {
        let mut b: BTreeMap<usize, i64> = BTreeMap::new();
        *b.entry(self.bottom).or_default() += 1;
        for c in self.plus_side() {
            *b.entry(*c).or_default() += 1;
        }
        for c in &self.top {
            *b.entry(*c).or_default() -= self.zeta as i64;
        }
        for c in self.minus_side() {
            *b.entry(*c).or_default() -= 1;
        }
        b.retain(|_, v| *v != 0);
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StripSummary {
    pub strips: usize,
    pub with_skew: usize,
    pub diagonals: Vec<String>,
}

/// The folded mapping torus with its trapezoid cell structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrapezoidComplex {
    pub cells0: Vec<Cell0>,
    pub cells1: Vec<Cell1>,
    pub trapezoids: Vec<Trapezoid>,
    pub strips: StripSummary,
    /// Euler characteristic of the fiber graph.
    pub fiber_euler: i64,
}

struct Sweep {
    top: usize,
    width: Q,
    bottom: usize,
    alpha: Q,
    beta: Q,
    d0: Q,
    d1: Q,
    provenance: Vec<String>,
}

/// Builds the trapezoid complex from a map and a fold sequence for it.
pub fn build_torus(m: &GraphMap, fs: &FoldSequence) -> Result<TrapezoidComplex> {
    Ok(build_with_model(m, fs)?.0)
}

/// As [`build_torus`], also returning the flow model and the 0-cell points.
pub fn build_with_model(m: &GraphMap, fs: &FoldSequence) -> Result<(TrapezoidComplex, FlowModel, Vec<FlowPoint>)> {
    let fm = FlowModel::new(m, fs)?;
    let d = fm.d().clone();
    let mm = fm.m();
    let mut skews: Vec<OldSkew> = (0..mm).map(OldSkew::Fold).collect();
    skews.extend((0..d.num_oriented()).filter(|y| fm.diagonal[*y]).map(OldSkew::Diagonal));
    let skew_index = |k: &OldSkew| skews.iter().position(|s| s == k).expect("known skew");

    // Sweep below every skew cell.
    let mut sweeps = Vec::new();
    for (si, k) in skews.iter().enumerate() {
        let starts: Vec<(usize, EdgeId, Q)> = match k {
            OldSkew::Fold(j) => {
                let f = &fs.folds[*j];
                let slope = rational::one() / fm.big_l();
                vec![(*j, f.e, slope.clone()), (*j, f.e_prime, slope)]
            }
            OldSkew::Diagonal(y) => vec![(0, *y, fm.time(1) / d.length(*y))],
        };
        for (level, edge, slope) in starts {
            let mut sw = Sweep {
                top: si,
                width: fm.skew_len(k),
                bottom: 0,
                alpha: rational::zero(),
                beta: rational::one(),
                d0: rational::zero(),
                d1: slope,
                provenance: vec![format!("{}@{}", d.edge_names[edge], level)],
            };
            descend(&fm, &mut sw, level, edge, &skew_index)?;
            sweeps.push(sw);
        }
    }

    // Breakpoints on every old skew: its ends and the ends of the arcs below trapezoids.
    let mut cuts: Vec<BTreeSet<Q>> = skews.iter().map(|k| [rational::zero(), fm.skew_len(k)].into()).collect();
    for sw in &sweeps {
        cuts[sw.bottom].insert(sw.alpha.clone());
        cuts[sw.bottom].insert(&sw.alpha + &sw.beta * &sw.width);
    }
    let mut points: BTreeSet<FlowPoint> = BTreeSet::new();
    for (si, k) in skews.iter().enumerate() {
        for s in &cuts[si] {
            points.insert(fm.skew_point(k, s));
        }
    }
    let points: Vec<FlowPoint> = points.into_iter().collect();
    let vid = |p: &FlowPoint| points.binary_search(p).map_err(|_| crate::Error::Internal("unknown vertex".into()));

    let mut cells1: Vec<Cell1> = Vec::new();
    let mut piece_id: BTreeMap<(usize, Q), usize> = BTreeMap::new();
    for (si, k) in skews.iter().enumerate() {
        let c: Vec<&Q> = cuts[si].iter().collect();
        for w in c.windows(2) {
            let (a, b) = (w[0], w[1]);
            piece_id.insert((si, a.clone()), cells1.len());
            let name = match k {
                OldSkew::Fold(j) => format!("fold{}", j + 1),
                OldSkew::Diagonal(y) => format!("diag[{}]", d.edge_names[*y]),
            };
            cells1.push(Cell1 {
                kind: CellKind::Skew,
                origin: vid(&fm.skew_point(k, a))?,
                terminus: vid(&fm.skew_point(k, b))?,
                degree: 0,
                span: fm.skew_time(k, b) - fm.skew_time(k, a),
                param_len: b - a,
                label: format!("{}[{},{}]", name, rational::fmt(a), rational::fmt(b)),
            });
        }
    }
    // Each bottom arc must be exactly one piece.
    let mut bottom_used = vec![false; cells1.len()];
    for sw in &sweeps {
        let a = &sw.alpha;
        let b = &sw.alpha + &sw.beta * &sw.width;
        let lo = a.clone().min(b.clone());
        let hi = a.clone().max(b);
        let Some(&pid) = piece_id.get(&(sw.bottom, lo.clone())) else {
            return internal("bottom arc does not start at a breakpoint");
        };
        if cells1[pid].param_len != &hi - &lo || bottom_used[pid] {
            return internal("bottom arcs do not tile the skew cells");
        }
        bottom_used[pid] = true;
    }
    if bottom_used.iter().any(|u| !u) {
        return internal("a skew piece is not the bottom of any trapezoid");
    }

    // Vertical cells, keyed by their start vertex.
    let mut verticals: BTreeMap<usize, (usize, Q)> = BTreeMap::new();
    let mut side_chains: Vec<[Vec<usize>; 2]> = Vec::new();
    for sw in &sweeps {
        let k_top = &skews[sw.top];
        let k_bot = &skews[sw.bottom];
        let mut chains: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (side, w) in [rational::zero(), sw.width.clone()].iter().enumerate() {
            let from = fm.skew_point(k_bot, &(&sw.alpha + &sw.beta * w));
            let to = fm.skew_point(k_top, w);
            let dur = &sw.d0 + &sw.d1 * w;
            if fm.flow(&from, &dur) != to {
                return internal(format!(
                    "side of trapezoid below skew {} does not reach its top ({} -> {})",
                    sw.top,
                    fm.describe(&from),
                    fm.describe(&to)
                ));
            }
            let mut hits: Vec<(Q, usize)> = Vec::new();
            for (r, pr) in points.iter().enumerate() {
                let mut delta = rational::frac(&(&pr.time - &from.time));
                while delta <= dur {
                    if fm.flow(&from, &delta) == *pr {
                        hits.push((delta.clone(), r));
                    }
                    delta += rational::one();
                }
            }
            hits.sort();
            for h in hits.windows(2) {
                let (d1, a) = (&h[0].0, h[0].1);
                let (d2, b) = (&h[1].0, h[1].1);
                let len = d2 - d1;
                match verticals.get(&a) {
                    Some((b2, l2)) if *b2 != b || *l2 != len => {
                        return internal("inconsistent vertical cells at a vertex");
                    }
                    _ => {
                        verticals.insert(a, (b, len));
                    }
                }
                chains[side].push(a);
            }
        }
        side_chains.push(chains);
    }
    let mut vertical_id: BTreeMap<usize, usize> = BTreeMap::new();
    for (a, (b, len)) in &verticals {
        vertical_id.insert(*a, cells1.len());
        cells1.push(Cell1 {
            kind: CellKind::Vertical,
            origin: *a,
            terminus: *b,
            degree: 0,
            span: len.clone(),
            param_len: len.clone(),
            label: format!("v{}", a),
        });
    }

    let mut trapezoids = Vec::new();
    for (sw, chains) in sweeps.iter().zip(side_chains) {
        let cut: Vec<&Q> = cuts[sw.top].iter().collect();
        let top: Vec<usize> = cut[..cut.len() - 1].iter().map(|c| piece_id[&(sw.top, (*c).clone())]).collect();
        let end = &sw.alpha + &sw.beta * &sw.width;
        let lo = sw.alpha.clone().min(end);
        trapezoids.push(Trapezoid {
            width: sw.width.clone(),
            bottom: piece_id[&(sw.bottom, lo.clone())],
            bottom_alpha: &sw.alpha - &lo,
            bottom_beta: sw.beta.clone(),
            top,
            breaks: cut.iter().map(|c| (*c).clone()).collect(),
            zeta: if sw.beta > rational::zero() { 1 } else { -1 },
            flow_base: sw.d0.clone(),
            flow_slope: sw.d1.clone(),
            left: chains[0].iter().map(|a| vertical_id[a]).collect(),
            right: chains[1].iter().map(|a| vertical_id[a]).collect(),
            provenance: sw.provenance.join(" > "),
        });
    }

    let cells0 = points.iter().map(|p| Cell0 { label: fm.describe(p), height: Some(p.time.clone()) }).collect();
    let diagonals: Vec<String> = skews
        .iter()
        .filter_map(|k| match k {
            OldSkew::Diagonal(y) => Some(d.edge_names[*y].clone()),
            _ => None,
        })
        .collect();
    let strips = StripSummary { strips: d.num_edges(), with_skew: d.num_edges() - diagonals.len(), diagonals };
    let mut x = TrapezoidComplex { cells0, cells1, trapezoids, strips, fiber_euler: m.graph.euler_characteristic() };
    x.compute_degrees();
    check_local_models(&x, &fm, &points)?;
    x.check_e0_cycle()?;
    Ok((x, fm, points))
}

/// Degrees against the local models: fold pieces 3, diagonal pieces 2,
/// vertical cells the valence of the fiber point they pass through.
fn check_local_models(x: &TrapezoidComplex, fm: &FlowModel, points: &[FlowPoint]) -> Result<()> {
    for c in &x.cells1 {
        let want = match c.kind {
            CellKind::Skew if c.label.starts_with("diag") => 2,
            CellKind::Skew => 3,
            CellKind::Vertical => fm.valence(&fm.flow(&points[c.origin], &(&c.span / q(2)))),
        };
        if c.degree != want {
            return internal(format!("cell {} has degree {} but its local model gives {}", c.label, c.degree, want));
        }
    }
    Ok(())
}

fn descend(
    fm: &FlowModel,
    sw: &mut Sweep,
    mut level: usize,
    mut edge: EdgeId,
    skew_index: &dyn Fn(&OldSkew) -> usize,
) -> Result<()> {
    let d = fm.d();
    let mm = fm.m();
    let l = fm.big_l().clone();
    for _ in 0..64 * (mm + 2) {
        if level == 0 {
            // Glue down to the last stage through the target graph.
            let (y, a, b) = if d.positive[edge] {
                (edge, sw.alpha.clone(), sw.beta.clone())
            } else {
                (d.inv[edge], d.length(edge) - &sw.alpha, -sw.beta.clone())
            };
            let (g, off) = fm.piece_of[y].clone();
            let ratio = fm.gamma.length(g) / &fm.image_len[g];
            sw.alpha = (off + a) * &ratio;
            sw.beta = b * ratio;
            edge = fm.last_edge[g];
            level = mm;
            sw.provenance.push(format!("{}@{}", d.edge_names[edge], level));
            continue;
        }
        let f = &fm.fs.folds[level - 1];
        let gap = fm.time(level) - fm.time(level - 1);
        if d.unoriented(edge) == d.unoriented(f.e) {
            let (a, b) = if edge == f.e {
                (sw.alpha.clone(), sw.beta.clone())
            } else {
                (d.length(edge) - &sw.alpha, -sw.beta.clone())
            };
            sw.d0 += &gap - &a / &l;
            sw.d1 -= &b / &l;
            sw.alpha = a;
            sw.beta = b;
            sw.bottom = skew_index(&OldSkew::Fold(level - 1));
            return Ok(());
        }
        if level == 1 && fm.diagonal[d.unoriented(edge)] {
            let y = d.unoriented(edge);
            let (a, b) = if edge == y {
                (sw.alpha.clone(), sw.beta.clone())
            } else {
                (d.length(edge) - &sw.alpha, -sw.beta.clone())
            };
            let rate = fm.time(1) / d.length(y);
            sw.d0 += &gap - &a * &rate;
            sw.d1 -= &b * &rate;
            sw.alpha = a;
            sw.beta = b;
            sw.bottom = skew_index(&OldSkew::Diagonal(y));
            return Ok(());
        }
        sw.d0 += gap;
        level -= 1;
        sw.provenance.push(format!("{}@{}", d.edge_names[edge], level));
    }
    internal("sweep below a skew cell did not terminate")
}

impl TrapezoidComplex {
    pub fn num_vertical(&self) -> usize {
        self.cells1.iter().filter(|c| c.kind == CellKind::Vertical).count()
    }

    pub fn num_skew(&self) -> usize {
        self.cells1.len() - self.num_vertical()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells0.len() as i64 - self.cells1.len() as i64 + self.trapezoids.len() as i64
    }

    /// Number of trapezoid boundary incidences of each 1-cell.
    pub fn compute_degrees(&mut self) {
        let mut deg = vec![0usize; self.cells1.len()];
        for t in &self.trapezoids {
            deg[t.bottom] += 1;
            for c in t.top.iter().chain(&t.left).chain(&t.right) {
                deg[*c] += 1;
            }
        }
        for (c, d) in self.cells1.iter_mut().zip(deg) {
            c.degree = d;
        }
    }

    /// `∂₁` as a dense integer matrix (rows: 0-cells).
    pub fn boundary1(&self) -> Vec<Vec<i64>> {
        let mut b = vec![vec![0i64; self.cells1.len()]; self.cells0.len()];
        for (j, c) in self.cells1.iter().enumerate() {
            b[c.terminus][j] += 1;
            b[c.origin][j] -= 1;
        }
        b
    }

    /// `∂₂` as a dense integer matrix (rows: 1-cells).
    pub fn boundary2(&self) -> Vec<Vec<i64>> {
        let mut b = vec![vec![0i64; self.trapezoids.len()]; self.cells1.len()];
        for (j, t) in self.trapezoids.iter().enumerate() {
            for (c, v) in t.boundary() {
                b[c][j] += v;
            }
        }
        b
    }

    /// The `E₀`-class `½ Σ (2 − d(e)) e`.
    pub fn e0_class(&self) -> Vec<Q> {
        self.cells1.iter().map(|c| rational::qr(2 - c.degree as i64, 2)).collect()
    }

    /// `∂ε` per 0-cell; all zero for a valid complex.
    pub fn e0_boundary(&self) -> Vec<Q> {
        let eps = self.e0_class();
        let mut out = vec![rational::zero(); self.cells0.len()];
        for (c, x) in self.cells1.iter().zip(&eps) {
            out[c.terminus] += x;
            out[c.origin] -= x;
        }
        out
    }

    pub fn check_e0_cycle(&self) -> Result<()> {
        if self.e0_boundary().iter().any(|x| !x.is_zero()) {
            return internal("the E0-class is not a cycle");
        }
        Ok(())
    }

    /// Canonical cocycle: time spans of the 1-cells.
    pub fn canonical_cocycle(&self) -> Vec<Q> {
        self.cells1.iter().map(|c| c.span.clone()).collect()
    }

    /// Evaluates a cochain on every trapezoid boundary.
    pub fn coboundary_on_trapezoids(&self, z: &[Q]) -> Vec<Q> {
        self.trapezoids
            .iter()
            .map(|t| t.boundary().iter().fold(rational::zero(), |acc, (c, v)| acc + &z[*c] * q(*v)))
            .collect()
    }

    pub fn is_cocycle(&self, z: &[Q]) -> bool {
        self.coboundary_on_trapezoids(z).iter().all(|x| x.is_zero())
    }

    /// First Betti number `#E − rank ∂₁ − rank ∂₂`.
    pub fn betti1(&self) -> usize {
        let r1 = linalg::rank_q(&to_q(&self.boundary1()));
        let r2 = linalg::rank_q(&to_q(&self.boundary2()));
        self.cells1.len() - r1 - r2
    }

    /// Trapezoid whose bottom is each skew cell.
    pub fn bottom_of(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.cells1.len()];
        for (i, t) in self.trapezoids.iter().enumerate() {
            out[t.bottom] = Some(i);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub(crate) fn to_q(a: &[Vec<i64>]) -> Vec<Vec<Q>> {
    a.iter().map(|r| r.iter().map(|x| q(*x)).collect()).collect()
}
