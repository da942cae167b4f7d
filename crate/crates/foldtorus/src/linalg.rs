// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact dense linear algebra over the integers and the rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Q;

pub type IMat = Vec<Vec<BigInt>>;
pub type QMat = Vec<Vec<Q>>;

pub fn imat_from_i64(a: &[Vec<i64>]) -> IMat {
    a.iter().map(|r| r.iter().map(|x| BigInt::from(*x)).collect()).collect()
}

pub fn identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = a.len();
    let m = if b.is_empty() { 0 } else { b[0].len() };
    let k = b.len();
    let mut c = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[l][j].is_zero() {
                    c[i][j] += &a[i][l] * &b[l][j];
                }
            }
        }
    }
    c
}

pub fn imat_pow(a: &IMat, mut n: u32) -> IMat {
    let mut base = a.clone();
    let mut acc = identity(a.len());
    while n > 0 {
        if n & 1 == 1 {
            acc = imat_mul(&acc, &base);
        }
        n >>= 1;
        if n > 0 {
            base = imat_mul(&base, &base);
        }
    }
    acc
}

/// Characteristic polynomial `det(xI - A)`; entry `i` is the coefficient of `x^i`.
///
/// Faddeev–LeVerrier recursion; every division is exact over the integers.
pub fn charpoly(a: &IMat) -> Vec<BigInt> {
    let n = a.len();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        let mut next = imat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c[n - k + 1];
        }
        m = next;
        let am = imat_mul(a, &m);
        let tr: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
        c[n - k] = -(tr / BigInt::from(k));
    }
    c
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut QMat) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|i| !m[*i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_q(m: &QMat) -> usize {
    let mut w = m.clone();
    rref(&mut w).len()
}

/// Basis of `{x : m x = 0}` for a matrix with `cols` columns.
pub fn nullspace_q(m: &QMat, cols: usize) -> Vec<Vec<Q>> {
    let mut w = m.clone();
    let pivots = rref(&mut w);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|f| {
            let mut x = vec![Q::zero(); cols];
            x[*f] = Q::one();
            for (r, p) in pivots.iter().enumerate() {
                x[*p] = -w[r][*f].clone();
            }
            x
        })
        .collect()
}

/// Solves `m x = b` if consistent (any solution).
pub fn solve_q(m: &QMat, b: &[Q], cols: usize) -> Option<Vec<Q>> {
    let mut aug: QMat = m
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (r, p) in pivots.iter().enumerate() {
        x[*p] = aug[r][cols].clone();
    }
    Some(x)
}

/// Smith normal form `u * a * v = s` with unimodular `u`, `v`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub diag: Vec<BigInt>,
    pub u: IMat,
    pub v: IMat,
    pub s: IMat,
}

impl Snf {
    pub fn rank(&self) -> usize {
        self.diag.iter().filter(|d| !d.is_zero()).count()
    }

    /// Integral basis of the kernel of the original matrix (columns of `v`).
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let n = self.v.len();
        (self.rank()..n).map(|j| (0..n).map(|i| self.v[i][j].clone()).collect()).collect()
    }
}

pub fn snf(a: &IMat, cols: usize) -> Snf {
    let rows = a.len();
    let mut s = a.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut t = 0;
    while t < rows.min(cols) {
        // Pivot: smallest nonzero absolute value in the remaining block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !s[i][j].is_zero() && best.is_none_or(|(bi, bj)| s[i][j].abs() < s[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        s.swap(t, pi);
        u.swap(t, pi);
        for r in s.iter_mut() {
            r.swap(t, pj);
        }
        for r in v.iter_mut() {
            r.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if s[i][t].is_zero() {
                    continue;
                }
                let qt = s[i][t].div_floor(&s[t][t]);
                for j in 0..cols {
                    let d = &qt * &s[t][j];
                    s[i][j] -= d;
                }
                for j in 0..rows {
                    let d = &qt * &u[t][j];
                    u[i][j] -= d;
                }
                if !s[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if s[t][j].is_zero() {
                    continue;
                }
                let qt = s[t][j].div_floor(&s[t][t]);
                for i in 0..rows {
                    let d = &qt * &s[i][t];
                    s[i][j] -= d;
                }
                for i in 0..cols {
                    let d = &qt * &v[i][t];
                    v[i][j] -= d;
                }
                if !s[t][j].is_zero() {
                    dirty = true;
                }
            }
            if !dirty {
                // Divisibility of the rest of the block by the pivot.
                let mut fix = None;
                'outer: for i in t + 1..rows {
                    for j in t + 1..cols {
                        if !(&s[i][j] % &s[t][t]).is_zero() {
                            fix = Some(i);
                            break 'outer;
                        }
                    }
                }
                match fix {
                    Some(i) => {
                        for j in 0..cols {
                            let x = s[i][j].clone();
                            s[t][j] += x;
                        }
                        for j in 0..rows {
                            let x = u[i][j].clone();
                            u[t][j] += x;
                        }
                    }
                    None => break,
                }
            }
            // Restore the smallest entry to the pivot position if needed.
            let mut best = (t, t);
            for i in t..rows {
                if !s[i][t].is_zero() && s[i][t].abs() < s[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !s[t][j].is_zero() && s[t][j].abs() < s[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                s.swap(t, best.0);
                u.swap(t, best.0);
            }
            if best.1 != t {
                for r in s.iter_mut() {
                    r.swap(t, best.1);
                }
                for r in v.iter_mut() {
                    r.swap(t, best.1);
                }
            }
        }
        if s[t][t].is_negative() {
            for j in 0..cols {
                s[t][j] = -s[t][j].clone();
            }
            for j in 0..rows {
                u[t][j] = -u[t][j].clone();
            }
        }
        t += 1;
    }
    let diag = (0..rows.min(cols)).map(|i| s[i][i].clone()).collect();
    Snf { diag, u, v, s }
}

/// Row Hermite normal form of a list of integer row vectors. Rows of the
/// result span the same lattice; zero rows are dropped.
pub fn hermite_rows(rows: &[Vec<BigInt>]) -> IMat {
    let mut h: IMat = rows.to_vec();
    let cols = h.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        loop {
            let pivot = (r..h.len()).filter(|i| !h[*i][c].is_zero()).min_by_key(|i| h[*i][c].abs());
            let Some(p) = pivot else { break };
            h.swap(r, p);
            let mut done = true;
            for i in r + 1..h.len() {
                if h[i][c].is_zero() {
                    continue;
                }
                let qt = h[i][c].div_floor(&h[r][c]);
                let pr = h[r].clone();
                for (x, y) in h[i].iter_mut().zip(&pr) {
                    *x -= &qt * y;
                }
                if !h[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                if h[r][c].is_negative() {
                    for x in h[r].iter_mut() {
                        *x = -x.clone();
                    }
                }
                let pr = h[r].clone();
                for i in 0..r {
                    let qt = h[i][c].div_floor(&pr[c]);
                    for (x, y) in h[i].iter_mut().zip(&pr) {
                        *x -= &qt * y;
                    }
                }
                r += 1;
                break;
            }
        }
        if r == h.len() {
            break;
        }
    }
    h.truncate(r);
    h
}

pub fn to_qmat(a: &IMat) -> QMat {
    a.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect()
}
