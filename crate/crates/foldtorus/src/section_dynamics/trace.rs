// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Frame, HeightAssignment, SectionGraph};
use crate::error::{internal, Error, Result};
use crate::graph_core::{self, EdgeId};
use crate::graph_maps::GraphMap;
use crate::mapping_torus::TrapezoidComplex;
use crate::rational::{self, Q};

const STEP_CAP: usize = 200_000;
const POINT_CAP: usize = 4096;

/// A maximal piece of the image of a section edge inside one section edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImagePiece {
    #[serde(serialize_with = "crate::report::ser_q")]
    pub u0: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub u1: Q,
    pub target: usize,
    /// Target widths of the images of `u0` and `u1`.
    #[serde(serialize_with = "crate::report::ser_q")]
    pub w0: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub w1: Q,
}

impl ImagePiece {
    pub fn reversed(&self) -> bool {
        self.w1 < self.w0
    }
}

/// A point of the section: a vertex or an interior point of an edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SectionPoint {
    Vertex(usize),
    Interior(usize, #[serde(serialize_with = "crate::report::ser_q")] Q),
}

/// Invariant finite set of marked points and the induced graph map.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Closure {
    Closed {
        depth: usize,
        marked: usize,
        #[serde(skip)]
        map: Box<GraphMap>,
    },
    Open {
        depth: usize,
        marked: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnMap {
    /// Image pieces of every section edge, ordered along the edge.
    pub pieces: Vec<Vec<ImagePiece>>,
    pub vertex_images: Vec<SectionPoint>,
    /// Image of every section edge as a word of section edges.
    pub words: Vec<String>,
    pub closure: Closure,
}

struct Tracer<'a> {
    sec: &'a SectionGraph,
    frames: Vec<Frame<'a>>,
    above: Vec<Option<usize>>,
    x0: Q,
}

struct State {
    t: usize,
    lo: Q,
    hi: Q,
    /// Current width is `a * u + b`.
    a: Q,
    b: Q,
    off: Q,
}

impl<'a> Tracer<'a> {
    fn new(x: &'a TrapezoidComplex, z: &'a [Q], h: &HeightAssignment, sec: &'a SectionGraph) -> Self {
        let frames = x.trapezoids.iter().map(|t| Frame::new(x, t, z, &h.lift)).collect();
        Tracer { sec, frames, above: x.bottom_of(), x0: h.x0.clone() }
    }

    /// Flows `[u_lo, u_hi]` of section edge `s` up by one level.
    fn trace(&self, s: usize, u_lo: &Q, u_hi: &Q) -> Result<Vec<ImagePiece>> {
        let edge = &self.sec.edges[s];
        let goal = &self.x0 + rational::q(edge.level + 1);
        let mut stack = vec![State {
            t: edge.trapezoid,
            lo: u_lo.clone(),
            hi: u_hi.clone(),
            a: rational::one(),
            b: rational::zero(),
            off: rational::zero(),
        }];
        let point = u_lo == u_hi;
        let mut out = Vec::new();
        let mut steps = 0;
        while let Some(st) = stack.pop() {
            steps += 1;
            if steps > STEP_CAP {
                return Err(Error::CapExceeded("return map tracing did not terminate".into()));
            }
            let f = &self.frames[st.t];
            let t = f.t;
            let y = &goal - &st.off;
            let u_of = |w: &Q| (w - &st.b) / &st.a;
            for i in 0..t.top.len() {
                let (b0, b1) = (&t.breaks[i], &t.breaks[i + 1]);
                let s0 = if &st.lo > b0 { st.lo.clone() } else { b0.clone() };
                let s1 = if &st.hi < b1 { st.hi.clone() } else { b1.clone() };
                if s0 > s1 || (!point && s0 == s1) {
                    continue;
                }
                let c = if y <= f.ht(&s0) {
                    Some(s0.clone())
                } else if y > f.ht(&s1) {
                    None
                } else {
                    Some(f.ht_inv(&y))
                };
                if let Some(c) = &c {
                    if point || c < &s1 {
                        let level = super::integer(&(&y - &self.x0))?;
                        let Some(target) = self.sec.edge_of(st.t, level) else {
                            return internal("flow lands off the section");
                        };
                        let (u0, u1) = (u_of(c), u_of(&s1));
                        let (w0, w1) = (c.clone(), s1.clone());
                        out.push(if u0 <= u1 {
                            ImagePiece { u0, u1, target, w0, w1 }
                        } else {
                            ImagePiece { u0: u1, u1: u0, target, w0: w1, w1: w0 }
                        });
                    }
                }
                let e_end = c.unwrap_or_else(|| s1.clone());
                if point && f.ht(&s0) >= y {
                    break;
                }
                if !point && e_end <= s0 {
                    continue;
                }
                let Some(tn) = self.above[t.top[i]] else {
                    return internal("top cell bounds no trapezoid");
                };
                let fnext = &self.frames[tn];
                let tnext = fnext.t;
                let map = |w: &Q| (w - b0 - &tnext.bottom_alpha) / &tnext.bottom_beta;
                let (n0, n1) = (map(&s0), map(&e_end));
                let off = &st.off + f.ht(&s0) - fnext.hb(&n0);
                if &st.off + f.ht(&e_end) - fnext.hb(&n1) != off || !rational::is_integer(&(&off - &st.off)) {
                    return internal("frames disagree across a top cell");
                }
                let a = &st.a / &tnext.bottom_beta;
                let b = (&st.b - b0 - &tnext.bottom_alpha) / &tnext.bottom_beta;
                let (lo, hi) = if n0 <= n1 { (n0, n1) } else { (n1, n0) };
                stack.push(State { t: tn, lo, hi, a, b, off });
                if point {
                    break;
                }
            }
        }
        out.sort_by(|p, q| p.u0.cmp(&q.u0));
        let mut merged: Vec<ImagePiece> = Vec::new();
        for p in out {
            if let Some(last) = merged.last_mut() {
                if last.target == p.target && last.u1 == p.u0 && last.w1 == p.w0 && last.reversed() == p.reversed() {
                    last.u1 = p.u1;
                    last.w1 = p.w1;
                    continue;
                }
            }
            merged.push(p);
        }
        if point {
            merged.truncate(1);
        }
        Ok(merged)
    }

    fn normalize(&self, e: usize, w: Q) -> SectionPoint {
        let edge = &self.sec.edges[e];
        if w == edge.w_from {
            SectionPoint::Vertex(edge.from)
        } else if w == edge.w_to {
            SectionPoint::Vertex(edge.to)
        } else {
            SectionPoint::Interior(e, w)
        }
    }

    fn point_image(&self, e: usize, w: &Q) -> Result<SectionPoint> {
        let p = self.trace(e, w, w)?;
        let Some(p) = p.first() else { return internal("a point has no image") };
        Ok(self.normalize(p.target, p.w0.clone()))
    }

    /// Checks that each image is an unbroken path from the image of the
    /// start vertex to the image of the end vertex.
    fn check_path(&self, s: usize, pieces: &[ImagePiece], vimg: &[SectionPoint]) -> Result<()> {
        let edge = &self.sec.edges[s];
        if pieces.first().map(|p| &p.u0) != Some(&edge.w_from) || pieces.last().map(|p| &p.u1) != Some(&edge.w_to) {
            return internal("image does not cover the edge");
        }
        for w in pieces.windows(2) {
            if w[0].u1 != w[1].u0
                || self.normalize(w[0].target, w[0].w1.clone()) != self.normalize(w[1].target, w[1].w0.clone())
            {
                return internal("consecutive image pieces are not adjacent");
            }
        }
        let first = &pieces[0];
        let last = &pieces[pieces.len() - 1];
        if self.normalize(first.target, first.w0.clone()) != vimg[edge.from]
            || self.normalize(last.target, last.w1.clone()) != vimg[edge.to]
        {
            return internal("edge image does not match vertex images");
        }
        Ok(())
    }
}

/// Traces the first return map of the section and closes up the orbits of
/// vertex images when they are finite within `depth_cap` rounds.
pub fn first_return(
    x: &TrapezoidComplex,
    z: &[Q],
    h: &HeightAssignment,
    sec: &SectionGraph,
    depth_cap: usize,
) -> Result<ReturnMap> {
    let tr = Tracer::new(x, z, h, sec);
    let mut vertex_images = vec![None; sec.vertices.len()];
    for (i, e) in sec.edges.iter().enumerate() {
        if vertex_images[e.from].is_none() {
            vertex_images[e.from] = Some(tr.point_image(i, &e.w_from)?);
        }
        if vertex_images[e.to].is_none() {
            vertex_images[e.to] = Some(tr.point_image(i, &e.w_to)?);
        }
    }
    let Some(vertex_images) = vertex_images.into_iter().collect::<Option<Vec<_>>>() else {
        return internal("isolated section vertex");
    };
    let mut pieces = Vec::with_capacity(sec.edges.len());
    let mut words = Vec::with_capacity(sec.edges.len());
    for (i, e) in sec.edges.iter().enumerate() {
        let p = tr.trace(i, &e.w_from, &e.w_to)?;
        tr.check_path(i, &p, &vertex_images)?;
        words.push(
            p.iter()
                .map(|q| if q.reversed() { format!("s{}^-1", q.target) } else { format!("s{}", q.target) })
                .collect::<Vec<_>>()
                .join(" "),
        );
        pieces.push(p);
    }
    let closure = close_up(&tr, &vertex_images, &pieces, depth_cap)?;
    Ok(ReturnMap { pieces, vertex_images, words, closure })
}

fn close_up(tr: &Tracer, vimg: &[SectionPoint], pieces: &[Vec<ImagePiece>], depth_cap: usize) -> Result<Closure> {
    let sec = tr.sec;
    let mut marked: BTreeMap<usize, BTreeSet<Q>> = BTreeMap::new();
    let mut count = 0;
    let mut frontier: Vec<(usize, Q)> = vimg
        .iter()
        .filter_map(|p| match p {
            SectionPoint::Interior(e, w) => Some((*e, w.clone())),
            SectionPoint::Vertex(_) => None,
        })
        .collect();
    let mut depth = 0;
    while !frontier.is_empty() {
        if depth >= depth_cap || count > POINT_CAP {
            return Ok(Closure::Open { depth, marked: count });
        }
        depth += 1;
        let mut next = Vec::new();
        for (e, w) in frontier {
            if marked.entry(e).or_default().insert(w.clone()) {
                count += 1;
                if let SectionPoint::Interior(e2, w2) = tr.point_image(e, &w)? {
                    next.push((e2, w2));
                }
            }
        }
        frontier = next;
    }
    // Subdivide at the marked points; every piece then maps onto a path.
    let mut g = sec.graph.clone();
    let mut cuts: BTreeMap<EdgeId, Vec<Q>> = BTreeMap::new();
    for (i, e) in sec.edges.iter().enumerate() {
        g.set_length(2 * i, &e.w_to - &e.w_from);
        if let Some(m) = marked.get(&i) {
            cuts.insert(2 * i, m.iter().map(|w| w - &e.w_from).collect());
        }
    }
    let sub = graph_core::subdivide(&g, &cuts)?;
    let bounds = |i: usize| -> Vec<Q> {
        let e = &sec.edges[i];
        let mut b = vec![e.w_from.clone()];
        b.extend(marked.get(&i).into_iter().flatten().cloned());
        b.push(e.w_to.clone());
        b
    };
    let mut images: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    for (i, edge_pieces) in pieces.iter().enumerate() {
        let segs = &sub.correspondence[2 * i].edges;
        let b = bounds(i);
        for (j, seg) in segs.iter().enumerate() {
            let (ua, ub) = (&b[j], &b[j + 1]);
            let mut word = Vec::new();
            for p in edge_pieces {
                let lo = if ua > &p.u0 { ua } else { &p.u0 };
                let hi = if ub < &p.u1 { ub } else { &p.u1 };
                if lo >= hi {
                    continue;
                }
                let at = |u: &Q| &p.w0 + (&p.w1 - &p.w0) * (u - &p.u0) / (&p.u1 - &p.u0);
                let (wa, wb) = (at(lo), at(hi));
                let tb = bounds(p.target);
                let tsegs = &sub.correspondence[2 * p.target].edges;
                let (mn, mx) = if wa < wb { (&wa, &wb) } else { (&wb, &wa) };
                let ka = tb.iter().position(|v| v == mn);
                let kb = tb.iter().position(|v| v == mx);
                let (Some(ka), Some(kb)) = (ka, kb) else {
                    return internal("marked set is not forward invariant");
                };
                let run: Vec<EdgeId> = (ka..kb).map(|k| tsegs[k]).collect();
                if wa < wb {
                    word.extend(run);
                } else {
                    word.extend(run.iter().rev().map(|s| sub.graph.inv[*s]));
                }
            }
            images.insert(*seg, word);
        }
    }
    let map = GraphMap::new(sub.graph, BTreeMap::new(), images)?;
    Ok(Closure::Closed { depth, marked: count, map: Box::new(map) })
}

/// `M[i][j]`: number of image pieces of edge `i` inside edge `j`.
pub fn crossing_matrix(rm: &ReturnMap, n: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; n]; n];
    for (i, ps) in rm.pieces.iter().enumerate() {
        for p in ps {
            m[i][p.target] += 1;
        }
    }
    m
}
