// SPDX-License-Identifier: MIT OR Apache-2.0

//! First cohomology of a trapezoid complex and its cone of positive classes.
//!
//! Cochains are vectors indexed by 1-cells. A class is stored through its
//! representative that vanishes on a fixed spanning tree, so two cocycles are
//! cohomologous exactly when their tree-normalized forms agree.

mod subdivision;

pub use subdivision::{
    detect_invariant_bands, is_unconstrained, make_unconstrained, max_ratio, refine_with, standard_refinement,
    standard_subdivide, Band, RoundStats, SubdivisionState, UnconstrainedRun,
};

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg;
use crate::lp::{self, LpOutcome};
use crate::mapping_torus::TrapezoidComplex;
use crate::rational::{self, Q};

/// A real 1-cochain on a trapezoid complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cocycle {
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub values: Vec<Q>,
}

impl Cocycle {
    pub fn new(values: Vec<Q>) -> Self {
        Cocycle { values }
    }

    pub fn is_cocycle(&self, x: &TrapezoidComplex) -> bool {
        self.values.len() == x.cells1.len() && x.is_cocycle(&self.values)
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| v.is_positive())
    }

    pub fn min(&self) -> Q {
        self.values.iter().min().cloned().unwrap_or_else(rational::zero)
    }
}

/// Integral basis of `H¹` in tree-normalized form.
#[derive(Clone, Debug, Serialize)]
pub struct H1Basis {
    pub tree: Vec<bool>,
    /// Basis cocycles, each vanishing on the tree.
    #[serde(skip)]
    pub basis: Vec<Vec<BigInt>>,
}

/// A class given by coordinates in an [`H1Basis`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CohomologyClass {
    #[serde(serialize_with = "crate::report::ser_qs")]
    pub coords: Vec<Q>,
    pub integral: bool,
    pub primitive: bool,
}

impl CohomologyClass {
    pub fn from_coords(coords: Vec<Q>) -> Self {
        let integral = coords.iter().all(rational::is_integer);
        let primitive = integral && {
            let g = coords.iter().fold(BigInt::zero(), |g, c| g.gcd(c.numer()));
            g.is_one()
        };
        CohomologyClass { coords, integral, primitive }
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::from_coords(self.coords.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_coords(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect())
    }
}

impl H1Basis {
    pub fn compute(x: &TrapezoidComplex) -> Result<Self> {
        let nv = x.cells0.len();
        let mut uf = UnionFind::<usize>::new(nv);
        let tree: Vec<bool> = x.cells1.iter().map(|c| uf.union(c.origin, c.terminus)).collect();
        let roots = (0..nv).filter(|v| uf.find(*v) == *v).count();
        if roots != 1 {
            return invalid("the complex is not connected");
        }
        let free: Vec<usize> = (0..x.cells1.len()).filter(|e| !tree[*e]).collect();
        // Tree-normalized cocycles: values on free cells annihilated by every trapezoid.
        let rows: Vec<Vec<BigInt>> = x
            .trapezoids
            .iter()
            .map(|t| {
                let b = t.boundary();
                free.iter().map(|e| BigInt::from(*b.get(e).unwrap_or(&0))).collect()
            })
            .collect();
        let kernel =
            if rows.is_empty() { linalg::identity(free.len()) } else { linalg::snf(&rows, free.len()).kernel_basis() };
        let kernel = linalg::hermite_rows(&kernel);
        let basis = kernel
            .into_iter()
            .map(|k| {
                let mut full = vec![BigInt::zero(); x.cells1.len()];
                for (e, v) in free.iter().zip(k) {
                    full[*e] = v;
                }
                full
            })
            .collect();
        Ok(H1Basis { tree, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Adds a coboundary so the cochain vanishes on the spanning tree.
    pub fn normalize(&self, x: &TrapezoidComplex, z: &[Q]) -> Vec<Q> {
        let c = self.potential(x, z);
        x.cells1.iter().zip(z).map(|(cell, v)| v - (&c[cell.terminus] - &c[cell.origin])).collect()
    }

    /// Vertex potential `c` with `c(t(e)) - c(o(e)) = z(e)` on tree cells, `c(0) = 0`.
    pub fn potential(&self, x: &TrapezoidComplex, z: &[Q]) -> Vec<Q> {
        let nv = x.cells0.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for (e, c) in x.cells1.iter().enumerate() {
            if self.tree[e] {
                adj[c.origin].push((e, c.terminus));
                adj[c.terminus].push((e, c.origin));
            }
        }
        let mut pot: Vec<Option<Q>> = vec![None; nv];
        pot[0] = Some(rational::zero());
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            let pv = pot[v].clone().expect("visited");
            for (e, w) in &adj[v] {
                if pot[*w].is_none() {
                    let step = if x.cells1[*e].origin == v { z[*e].clone() } else { -z[*e].clone() };
                    pot[*w] = Some(&pv + step);
                    queue.push_back(*w);
                }
            }
        }
        pot.into_iter().map(|p| p.unwrap_or_else(rational::zero)).collect()
    }

    /// Coordinates of the class of a cocycle.
    pub fn coordinates(&self, x: &TrapezoidComplex, z: &[Q]) -> Result<CohomologyClass> {
        if z.len() != x.cells1.len() || !x.is_cocycle(z) {
            return invalid("cochain is not a cocycle on this complex");
        }
        let n = self.normalize(x, z);
        let m: Vec<Vec<Q>> =
            (0..z.len()).map(|e| self.basis.iter().map(|b| Q::from_integer(b[e].clone())).collect()).collect();
        match linalg::solve_q(&m, &n, self.dim()) {
            Some(c) => Ok(CohomologyClass::from_coords(c)),
            None => invalid("cocycle not in the span of the basis"),
        }
    }

    /// Tree-normalized representative of a class.
    pub fn representative(&self, u: &CohomologyClass) -> Vec<Q> {
        let n = self.basis.first().map_or(0, |b| b.len());
        let mut z = vec![rational::zero(); n];
        for (b, c) in self.basis.iter().zip(&u.coords) {
            for (zi, bi) in z.iter_mut().zip(b) {
                if !bi.is_zero() {
                    *zi += c * Q::from_integer(bi.clone());
                }
            }
        }
        z
    }
}

/// Pairing of a cochain with the `E₀`-class.
pub fn pair_with_e0(x: &TrapezoidComplex, z: &[Q]) -> Q {
    x.e0_class().iter().zip(z).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConeVerdict {
    /// A positive representative and its smallest value.
    Inside {
        witness: Cocycle,
        #[serde(serialize_with = "crate::report::ser_q")]
        margin: Q,
    },
    /// A nonnegative cycle of total mass one on which the class is nonpositive.
    Outside {
        #[serde(serialize_with = "crate::report::ser_qs")]
        cycle: Vec<Q>,
        #[serde(serialize_with = "crate::report::ser_q")]
        pairing: Q,
    },
}

impl ConeVerdict {
    pub fn is_inside(&self) -> bool {
        matches!(self, ConeVerdict::Inside { .. })
    }
}

/// Decides whether a class has a positive representative by exact LP.
pub fn cone_contains(x: &TrapezoidComplex, basis: &H1Basis, u: &CohomologyClass) -> Result<ConeVerdict> {
    let z = basis.representative(u);
    let nv = x.cells0.len();
    let ne = x.cells1.len();
    // Variables: c⁺_v, c⁻_v for v >= 1, then t⁺, t⁻. Maximize t subject to
    // t - c(t(e)) + c(o(e)) <= z(e) and t <= 1.
    let nvars = 2 * (nv - 1) + 2;
    let tp = nvars - 2;
    let mut a = Vec::with_capacity(ne + 1);
    let mut b = Vec::with_capacity(ne + 1);
    let put = |row: &mut Vec<Q>, v: usize, s: i64| {
        if v > 0 {
            row[2 * (v - 1)] += rational::q(s);
            row[2 * (v - 1) + 1] -= rational::q(s);
        }
    };
    for (e, cell) in x.cells1.iter().enumerate() {
        let mut row = vec![rational::zero(); nvars];
        row[tp] = rational::one();
        row[tp + 1] = -rational::one();
        put(&mut row, cell.terminus, -1);
        put(&mut row, cell.origin, 1);
        a.push(row);
        b.push(z[e].clone());
    }
    let mut cap = vec![rational::zero(); nvars];
    cap[tp] = rational::one();
    cap[tp + 1] = -rational::one();
    a.push(cap.clone());
    b.push(rational::one());
    let LpOutcome::Optimal { x: sol, value } = lp::maximize(&cap, &a, &b) else {
        return crate::error::internal("cone LP is always feasible and bounded");
    };
    if value.is_positive() {
        let c: Vec<Q> = (0..nv)
            .map(|v| if v == 0 { rational::zero() } else { &sol[2 * (v - 1)] - &sol[2 * (v - 1) + 1] })
            .collect();
        let w: Vec<Q> = x.cells1.iter().zip(&z).map(|(cell, ze)| ze + &c[cell.terminus] - &c[cell.origin]).collect();
        let witness = Cocycle::new(w);
        let margin = witness.min();
        if !margin.is_positive() || !witness.is_cocycle(x) {
            return crate::error::internal("cone witness failed verification");
        }
        return Ok(ConeVerdict::Inside { witness, margin });
    }
    // Dual certificate: y >= 0, ∂y = 0, Σy = 1, minimizing z(y).
    let mut a = Vec::new();
    let mut b = Vec::new();
    for v in 0..nv {
        let mut row = vec![rational::zero(); ne];
        for (e, cell) in x.cells1.iter().enumerate() {
            if cell.terminus == v {
                row[e] += rational::one();
            }
            if cell.origin == v {
                row[e] -= rational::one();
            }
        }
        let neg: Vec<Q> = row.iter().map(|r| -r).collect();
        a.push(row);
        a.push(neg);
        b.push(rational::zero());
        b.push(rational::zero());
    }
    a.push(vec![rational::one(); ne]);
    b.push(rational::one());
    a.push(vec![-rational::one(); ne]);
    b.push(-rational::one());
    let obj: Vec<Q> = z.iter().map(|v| -v).collect();
    let LpOutcome::Optimal { x: y, value } = lp::maximize(&obj, &a, &b) else {
        return crate::error::internal("dual certificate LP failed");
    };
    let pairing = -value;
    if pairing.is_positive() {
        return crate::error::internal("dual certificate has positive pairing");
    }
    Ok(ConeVerdict::Outside { cycle: y, pairing })
}
