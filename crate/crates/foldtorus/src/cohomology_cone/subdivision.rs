// SPDX-License-Identifier: MIT OR Apache-2.0

//! Standard subdivision of trapezoid complexes with cocycle refinement.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{internal, precondition, Error, Result};
use crate::mapping_torus::{Cell0, Cell1, CellKind, Trapezoid, TrapezoidComplex};
use crate::rational::{self, Q};

/// A complex, a positive cocycle on it, and bookkeeping for the rounds.
#[derive(Clone, Debug, Serialize)]
pub struct SubdivisionState {
    pub complex: TrapezoidComplex,
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub z: Vec<Q>,
    /// Trapezoid of the starting complex containing each trapezoid.
    pub ancestor: Vec<usize>,
    /// 1-cells interior to a degenerate starting trapezoid.
    pub exempt: Vec<bool>,
    /// Degeneracy of each starting trapezoid.
    pub root_degenerate: Vec<bool>,
    pub round: usize,
}

/// A periodic chain of trapezoids with single-cell tops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Band {
    pub trapezoids: Vec<usize>,
    /// Bottom parameter of the closed orbit in each trapezoid.
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub orbit: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub round: usize,
    pub cells0: usize,
    pub cells1: usize,
    pub trapezoids: usize,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub skew_max: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub max_ratio: Q,
    pub constrained: usize,
    pub bands: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnconstrainedRun {
    pub state: SubdivisionState,
    pub rounds: Vec<RoundStats>,
}

impl SubdivisionState {
    pub fn new(x: &TrapezoidComplex, z: Vec<Q>) -> Result<Self> {
        if z.len() != x.cells1.len() || !x.is_cocycle(&z) {
            return precondition("cochain is not a cocycle on the complex");
        }
        if !z.iter().all(|v| v.is_positive()) {
            return precondition("cocycle is not positive");
        }
        Ok(SubdivisionState {
            complex: x.clone(),
            z,
            ancestor: (0..x.trapezoids.len()).collect(),
            exempt: vec![false; x.cells1.len()],
            root_degenerate: x.trapezoids.iter().map(|t| t.is_degenerate()).collect(),
            round: 0,
        })
    }

    /// Largest value of the cocycle on a skew cell.
    pub fn skew_max(&self) -> Q {
        self.complex
            .cells1
            .iter()
            .zip(&self.z)
            .filter(|(c, _)| c.kind == CellKind::Skew)
            .map(|(_, v)| v.clone())
            .max()
            .unwrap_or_else(rational::zero)
    }

    pub fn stats(&self, bands: usize) -> RoundStats {
        let x = &self.complex;
        RoundStats {
            round: self.round,
            cells0: x.cells0.len(),
            cells1: x.cells1.len(),
            trapezoids: x.trapezoids.len(),
            skew_max: self.skew_max(),
            max_ratio: max_ratio(x, &self.z),
            constrained: x.trapezoids.iter().filter(|t| !is_unconstrained(t, &self.z)).count(),
            bands,
        }
    }
}

fn chain_value(cells: &[usize], z: &[Q]) -> Q {
    cells.iter().map(|c| &z[*c]).sum()
}

/// Skew ratios of a trapezoid, listed in increasing width.
fn ratios(t: &Trapezoid, z: &[Q]) -> Vec<Q> {
    let total = chain_value(&t.top, z);
    t.top.iter().map(|c| &z[*c] / &total).collect()
}

/// Largest skew ratio over trapezoids whose top has at least two cells.
pub fn max_ratio(x: &TrapezoidComplex, z: &[Q]) -> Q {
    x.trapezoids.iter().filter(|t| t.top.len() > 1).flat_map(|t| ratios(t, z)).max().unwrap_or_else(rational::zero)
}

/// `max{0, z(e₋)} <= min{z(ℓ₋), z(ℓ₋) + z(e₊)}` with `e₊ = ζ·Σ top`.
pub fn is_unconstrained(t: &Trapezoid, z: &[Q]) -> bool {
    let bottom = &z[t.bottom];
    let minus = chain_value(t.minus_side(), z);
    let top = chain_value(&t.top, z) * rational::q(t.zeta as i64);
    let lhs = bottom.clone().max(rational::zero());
    let rhs = minus.clone().min(&minus + &top);
    lhs <= rhs
}

/// Refined values on one trapezoid: bottom pieces in order of increasing
/// width parameter, then the new vertical cells at the cuts.
pub fn refine_with(bottom: &Q, minus: &Q, plus: &Q, rho: &[Q], zeta: i8) -> (Vec<Q>, Vec<Q>) {
    let pieces = rho.iter().map(|r| r * bottom).collect();
    let mut left = rational::zero();
    let verticals = rho[..rho.len().saturating_sub(1)]
        .iter()
        .map(|r| {
            left += r;
            let frac = if zeta > 0 { left.clone() } else { rational::one() - &left };
            minus * (rational::one() - &frac) + plus * &frac
        })
        .collect();
    (pieces, verticals)
}

/// Standard refinement of a trapezoid with top values `top`, listed in
/// increasing width.
pub fn standard_refinement(bottom: &Q, minus: &Q, plus: &Q, top: &[Q], zeta: i8) -> (Vec<Q>, Vec<Q>) {
    let total: Q = top.iter().sum();
    let rho: Vec<Q> = top.iter().map(|v| v / &total).collect();
    refine_with(bottom, minus, plus, &rho, zeta)
}

/// Fixed point of `p -> a p + b`, the midpoint when the map is the identity on `[0, len]`.
pub fn affine_fixed_point(a: &Q, b: &Q, len: &Q) -> Option<Q> {
    if a.is_one() {
        return if b.is_zero() { Some(len / rational::q(2)) } else { None };
    }
    Some(b / (rational::one() - a))
}

/// Invariant bands and the closed orbit in each.
pub fn detect_invariant_bands(x: &TrapezoidComplex) -> Result<Vec<Band>> {
    let above = x.bottom_of();
    let n = x.trapezoids.len();
    // next[T] = trapezoid above the single top cell of T.
    let next: Vec<Option<usize>> =
        x.trapezoids.iter().map(|t| if t.top.len() == 1 { above[t.top[0]] } else { None }).collect();
    let mut color = vec![0u8; n];
    let mut bands = Vec::new();
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = Some(start);
        while let Some(t) = cur {
            if color[t] != 0 {
                break;
            }
            color[t] = 1;
            path.push(t);
            cur = next[t];
        }
        if let Some(t) = cur {
            if color[t] == 1 {
                let cycle: Vec<usize> = path[path.iter().position(|p| *p == t).expect("on path")..].to_vec();
                bands.push(band_orbit(x, cycle)?);
            }
        }
        for p in path {
            color[p] = 2;
        }
    }
    Ok(bands)
}

fn band_orbit(x: &TrapezoidComplex, cycle: Vec<usize>) -> Result<Band> {
    // Bottom parameter p maps to top parameter (p - α) / β.
    let (mut a, mut b) = (rational::one(), rational::zero());
    for t in &cycle {
        let t = &x.trapezoids[*t];
        a = &a / &t.bottom_beta;
        b = (&b - &t.bottom_alpha) / &t.bottom_beta;
    }
    let first = &x.trapezoids[cycle[0]];
    let Some(p0) = affine_fixed_point(&a, &b, &x.cells1[first.bottom].param_len) else {
        return internal("invariant band without a closed orbit");
    };
    let mut orbit = vec![p0];
    for t in &cycle[..cycle.len() - 1] {
        let t = &x.trapezoids[*t];
        let p = orbit.last().expect("nonempty");
        orbit.push((p - &t.bottom_alpha) / &t.bottom_beta);
    }
    Ok(Band { trapezoids: cycle, orbit })
}

/// Cuts (interior widths) and per-window ratios for one trapezoid.
struct Plan {
    cuts: Vec<Q>,
    rho: Vec<Q>,
}

/// One round: split invariant bands, then subdivide every trapezoid below
/// its top breakpoints, refining the cocycle.
pub fn standard_subdivide(state: &SubdivisionState) -> Result<(SubdivisionState, usize)> {
    if !state.z.iter().all(|v| v.is_positive()) {
        return precondition("cocycle is not positive");
    }
    let bands = detect_invariant_bands(&state.complex)?;
    let mut cur = state.clone();
    if !bands.is_empty() {
        let mut plans: Vec<Option<Plan>> = (0..cur.complex.trapezoids.len()).map(|_| None).collect();
        let half = rational::qr(1, 2);
        for band in &bands {
            for (t, p) in band.trapezoids.iter().zip(&band.orbit) {
                let tr = &cur.complex.trapezoids[*t];
                let w = (p - &tr.bottom_alpha) / &tr.bottom_beta;
                plans[*t] = Some(Plan { cuts: vec![w], rho: vec![half.clone(), half.clone()] });
            }
        }
        cur = split(&cur, &plans)?;
    }
    let plans: Vec<Option<Plan>> = cur
        .complex
        .trapezoids
        .iter()
        .map(|t| (t.top.len() > 1).then(|| Plan { cuts: t.breaks[1..t.top.len()].to_vec(), rho: ratios(t, &cur.z) }))
        .collect();
    let mut next = split(&cur, &plans)?;
    next.round = state.round + 1;
    let bound = max_ratio(&state.complex, &state.z).max(rational::qr(1, 2));
    if max_ratio(&next.complex, &next.z) > bound {
        return internal("maximal skew ratio grew beyond its bound");
    }
    Ok((next, bands.len()))
}

/// Subdivides the trapezoids with a plan. Top chains of every trapezoid
/// follow the refinement of their cells.
fn split(state: &SubdivisionState, plans: &[Option<Plan>]) -> Result<SubdivisionState> {
    let x = &state.complex;
    let z = &state.z;
    let above = x.bottom_of();

    // Pieces of every skew cell: (lo, hi, value, span) in increasing parameter.
    let mut pieces: Vec<Vec<(Q, Q, Q, Q)>> = Vec::with_capacity(x.cells1.len());
    for (s, cell) in x.cells1.iter().enumerate() {
        let whole = vec![(rational::zero(), cell.param_len.clone(), z[s].clone(), cell.span.clone())];
        if cell.kind == CellKind::Vertical {
            pieces.push(whole);
            continue;
        }
        let Some(t) = above[s] else { return internal("skew cell is not the bottom of a trapezoid") };
        let Some(plan) = &plans[t] else {
            pieces.push(whole);
            continue;
        };
        let tr = &x.trapezoids[t];
        let mut ws = vec![rational::zero()];
        ws.extend(plan.cuts.iter().cloned());
        ws.push(tr.width.clone());
        let mut ps: Vec<(Q, Q, Q, Q)> = ws
            .windows(2)
            .zip(refine_with(&z[s], &rational::zero(), &rational::zero(), &plan.rho, tr.zeta).0)
            .map(|(w, v)| {
                let (a, b) = (tr.bottom_at(&w[0]), tr.bottom_at(&w[1]));
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let span = &cell.span * (&hi - &lo) / &cell.param_len;
                (lo, hi, v, span)
            })
            .collect();
        ps.sort();
        pieces.push(ps);
    }

    // 0-cells: old ones, then the new points on split skew cells.
    let mut cells0 = x.cells0.clone();
    let mut point: Vec<BTreeMap<Q, usize>> = Vec::with_capacity(x.cells1.len());
    for (s, cell) in x.cells1.iter().enumerate() {
        let mut m = BTreeMap::new();
        m.insert(rational::zero(), cell.origin);
        m.insert(cell.param_len.clone(), cell.terminus);
        for (lo, _, _, _) in pieces[s].iter().skip(1) {
            let height =
                x.cells0[cell.origin].height.as_ref().map(|h| rational::frac(&(h + &cell.span * lo / &cell.param_len)));
            m.insert(lo.clone(), cells0.len());
            cells0.push(Cell0 { label: format!("{}@{}", cell.label, rational::fmt(lo)), height });
        }
        point.push(m);
    }

    // 1-cells: pieces of old cells in order, then new verticals.
    let mut cells1 = Vec::new();
    let mut newz = Vec::new();
    let mut exempt = Vec::new();
    let mut piece_ids: Vec<Vec<(Q, Q, usize)>> = Vec::with_capacity(x.cells1.len());
    for (s, cell) in x.cells1.iter().enumerate() {
        let mut ids = Vec::new();
        let multi = pieces[s].len() > 1;
        for (i, (lo, hi, val, span)) in pieces[s].iter().enumerate() {
            ids.push((lo.clone(), hi.clone(), cells1.len()));
            cells1.push(Cell1 {
                kind: cell.kind,
                origin: point[s][lo],
                terminus: point[s][hi],
                degree: 0,
                span: span.clone(),
                param_len: hi - lo,
                label: if multi { format!("{}.{}", cell.label, i + 1) } else { cell.label.clone() },
            });
            newz.push(val.clone());
            exempt.push(state.exempt[s]);
        }
        piece_ids.push(ids);
    }

    let mut trapezoids = Vec::new();
    let mut ancestor = Vec::new();
    for (ti, t) in x.trapezoids.iter().enumerate() {
        // Refined top chain as (w_lo, w_hi, cell).
        let mut top: Vec<(Q, Q, usize)> = Vec::new();
        for (i, c) in t.top.iter().enumerate() {
            for (lo, hi, id) in &piece_ids[*c] {
                top.push((&t.breaks[i] + lo, &t.breaks[i] + hi, *id));
            }
        }
        let mut ws = vec![rational::zero()];
        let mut verticals: Vec<usize> = Vec::new();
        if let Some(plan) = &plans[ti] {
            let zl = chain_value(t.minus_side(), z);
            let zr = chain_value(t.plus_side(), z);
            let exempt_here = state.root_degenerate[state.ancestor[ti]];
            let (_, vals) = refine_with(&z[t.bottom], &zl, &zr, &plan.rho, t.zeta);
            for (c, val) in plan.cuts.iter().zip(vals) {
                let origin = point[t.bottom][&t.bottom_at(c)];
                let terminus = top_point(&top, &cells1, c)?;
                verticals.push(cells1.len());
                cells1.push(Cell1 {
                    kind: CellKind::Vertical,
                    origin,
                    terminus,
                    degree: 0,
                    span: t.flow_time(c),
                    param_len: t.flow_time(c),
                    label: format!("v{}-{}", origin, terminus),
                });
                newz.push(val);
                exempt.push(exempt_here);
            }
            ws.extend(plan.cuts.iter().cloned());
        }
        ws.push(t.width.clone());
        let nwin = ws.len() - 1;
        for j in 0..nwin {
            let (a, b) = (&ws[j], &ws[j + 1]);
            let (pa, pb) = (t.bottom_at(a), t.bottom_at(b));
            let lo = pa.clone().min(pb.clone());
            let Some((plo, _, bottom)) =
                piece_ids[t.bottom].iter().find(|(l, h, _)| *l == lo && *h == pa.clone().max(pb.clone()))
            else {
                return internal("window bottom is not a single piece");
            };
            let sub: Vec<&(Q, Q, usize)> = top.iter().filter(|(l, h, _)| l >= a && h <= b).collect();
            let mut breaks: Vec<Q> = sub.iter().map(|(l, _, _)| l - a).collect();
            breaks.push(b - a);
            let tiles = sub.first().is_some_and(|s| &s.0 == a)
                && sub.last().is_some_and(|s| &s.1 == b)
                && sub.windows(2).all(|w| w[0].1 == w[1].0);
            if !tiles {
                return internal("refined top does not tile a window");
            }
            trapezoids.push(Trapezoid {
                width: b - a,
                bottom: *bottom,
                bottom_alpha: &pa - plo,
                bottom_beta: t.bottom_beta.clone(),
                top: sub.iter().map(|s| s.2).collect(),
                breaks,
                zeta: t.zeta,
                flow_base: t.flow_time(a),
                flow_slope: t.flow_slope.clone(),
                left: if j == 0 { t.left.iter().map(|c| piece_ids[*c][0].2).collect() } else { vec![verticals[j - 1]] },
                right: if j + 1 == nwin {
                    t.right.iter().map(|c| piece_ids[*c][0].2).collect()
                } else {
                    vec![verticals[j]]
                },
                provenance: t.provenance.clone(),
            });
            ancestor.push(state.ancestor[ti]);
        }
    }

    let mut complex =
        TrapezoidComplex { cells0, cells1, trapezoids, strips: x.strips.clone(), fiber_euler: x.fiber_euler };
    complex.compute_degrees();
    let next = SubdivisionState {
        complex,
        z: newz,
        ancestor,
        exempt,
        root_degenerate: state.root_degenerate.clone(),
        round: state.round,
    };
    next.verify(state)?;
    Ok(next)
}

impl SubdivisionState {
    /// Exact checks that a subdivision refines its parent.
    fn verify(&self, parent: &SubdivisionState) -> Result<()> {
        let x = &self.complex;
        let fail = |m: &str| Err(Error::Internal(format!("subdivision check failed: {m}")));
        if x.euler_characteristic() != parent.complex.euler_characteristic() {
            return fail("Euler characteristic changed");
        }
        if !x.is_cocycle(&self.z) {
            return fail("refined cochain is not a cocycle");
        }
        if !x.is_cocycle(&x.canonical_cocycle()) {
            return fail("flow times are not a cocycle");
        }
        if !self.z.iter().all(|v| v.is_positive()) {
            return fail("refinement is not positive");
        }
        let mut seen = vec![0usize; x.cells1.len()];
        for t in &x.trapezoids {
            seen[t.bottom] += 1;
        }
        for (c, n) in x.cells1.iter().zip(&seen) {
            if (c.kind == CellKind::Skew) != (*n == 1) {
                return fail("skew cells and trapezoid bottoms are not in bijection");
            }
        }
        let skew_total = |s: &SubdivisionState| -> Q {
            s.complex.cells1.iter().zip(&s.z).filter(|(c, _)| c.kind == CellKind::Skew).map(|(_, v)| v.clone()).sum()
        };
        if skew_total(self) != skew_total(parent) {
            return fail("skew values are not conserved");
        }
        x.check_e0_cycle()
    }
}

fn top_point(top: &[(Q, Q, usize)], cells1: &[Cell1], w: &Q) -> Result<usize> {
    for (lo, hi, id) in top {
        if lo == w {
            return Ok(cells1[*id].origin);
        }
        if hi == w {
            return Ok(cells1[*id].terminus);
        }
    }
    internal("cut does not meet a top vertex")
}

/// Standard subdivisions until every trapezoid is unconstrained.
pub fn make_unconstrained(
    x: &TrapezoidComplex,
    z: &[Q],
    max_rounds: usize,
    cell_budget: usize,
) -> Result<UnconstrainedRun> {
    let mut state = SubdivisionState::new(x, z.to_vec())?;
    let floor = x
        .cells1
        .iter()
        .zip(z)
        .filter(|(c, _)| c.kind == CellKind::Vertical)
        .map(|(_, v)| v.clone())
        .min()
        .unwrap_or_else(rational::zero);
    let mut rounds = vec![state.stats(0)];
    loop {
        if rounds.last().expect("nonempty").constrained == 0 {
            return Ok(UnconstrainedRun { state, rounds });
        }
        if state.round >= max_rounds {
            return Err(Error::CapExceeded(format!("still constrained after {max_rounds} rounds")));
        }
        let (next, bands) = standard_subdivide(&state)?;
        if next.complex.cells1.len() > cell_budget {
            return Err(Error::CapExceeded(format!(
                "subdivision reached {} cells, over the budget of {cell_budget}",
                next.complex.cells1.len()
            )));
        }
        for ((c, v), ex) in next.complex.cells1.iter().zip(&next.z).zip(&next.exempt) {
            if c.kind == CellKind::Vertical && !ex && *v < floor {
                return internal("a vertical value fell below the starting minimum");
            }
        }
        if next.skew_max() > state.skew_max() {
            return internal("skew maximum increased");
        }
        state = next;
        rounds.push(state.stats(bands));
    }
}
