// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact two-phase simplex over the rationals, Bland's rule throughout.
//!
//! Problems are `maximize c·x` subject to `A x <= b`, `x >= 0`.

use num_traits::{Signed, Zero};

use crate::rational::{self, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pr = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, w) in row.iter_mut().zip(&pr) {
                if !w.is_zero() {
                    *v -= &f * w;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj` over the current basis, ignoring columns in `banned`.
    /// Returns false when unbounded.
    fn optimize(&mut self, obj: &[Q], banned: &[bool]) -> bool {
        let rhs = self.width;
        loop {
            // Reduced costs c_j - c_B B^-1 A_j.
            let mut entering = None;
            for j in 0..self.width {
                if banned[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut red = obj[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    if !row[j].is_zero() {
                        red -= &obj[self.basis[i]] * &row[j];
                    }
                }
                if red.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut best: Option<(Q, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[rhs] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((r0, b0, _)) => ratio < *r0 || (ratio == *r0 && self.basis[i] < *b0),
                    };
                    if better {
                        best = Some((ratio, self.basis[i], i));
                    }
                }
            }
            let Some((_, _, r)) = best else { return false };
            self.pivot(r, c);
        }
    }
}

/// Solves `maximize c·x` subject to `A x <= b`, `x >= 0`.
pub fn maximize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    let art: Vec<usize> = (0..m).filter(|i| b[*i].is_negative()).collect();
    let width = n + m + art.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![rational::zero(); width + 1];
        let neg = b[i].is_negative();
        let s = if neg { -rational::one() } else { rational::one() };
        for j in 0..n {
            row[j] = &a[i][j] * &s;
        }
        row[n + i] = s.clone();
        row[width] = &b[i] * &s;
        if neg {
            let k = n + m + art.iter().position(|x| *x == i).expect("listed");
            row[k] = rational::one();
            basis.push(k);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, width };
    if !art.is_empty() {
        let mut obj = vec![rational::zero(); width];
        for k in n + m..width {
            obj[k] = -rational::one();
        }
        t.optimize(&obj, &vec![false; width]);
        let infeas: Q =
            t.basis.iter().enumerate().filter(|(_, b)| **b >= n + m).map(|(i, _)| t.rows[i][width].clone()).sum();
        if infeas.is_positive() {
            return LpOutcome::Infeasible;
        }
        // Drive degenerate artificials out of the basis.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|j| !t.rows[i][*j].is_zero()) {
                    t.pivot(i, j);
                }
            }
        }
    }
    let mut obj = vec![rational::zero(); width];
    obj[..n].clone_from_slice(c);
    let banned: Vec<bool> = (0..width).map(|j| j >= n + m).collect();
    if !t.optimize(&obj, &banned) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![rational::zero(); n];
    for (i, b) in t.basis.iter().enumerate() {
        if *b < n {
            x[*b] = t.rows[i][width].clone();
        }
    }
    let value = x.iter().zip(c).map(|(p, q)| p * q).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn textbook_optimum() {
        // max 3x + 5y; x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let a = vec![vec![q(1), q(0)], vec![q(0), q(2)], vec![q(3), q(2)]];
        let out = maximize(&[q(3), q(5)], &a, &[q(4), q(12), q(18)]);
        assert_eq!(out, LpOutcome::Optimal { x: vec![q(2), q(6)], value: q(36) });
    }

    #[test]
    fn phase_one_and_infeasibility() {
        // x + y >= 1 written as -x - y <= -1; max -x - 2y -> x = 1.
        let a = vec![vec![q(-1), q(-1)]];
        let out = maximize(&[q(-1), q(-2)], &a, &[q(-1)]);
        assert_eq!(out, LpOutcome::Optimal { x: vec![q(1), q(0)], value: q(-1) });
        let a = vec![vec![q(1)], vec![q(-1)]];
        assert_eq!(maximize(&[q(1)], &a, &[q(1), q(-2)]), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_and_fractional() {
        let a = vec![vec![q(1), q(-1)]];
        assert_eq!(maximize(&[q(0), q(1)], &a, &[q(1)]), LpOutcome::Unbounded);
        let a = vec![vec![q(3)]];
        assert_eq!(maximize(&[q(1)], &a, &[q(1)]), LpOutcome::Optimal { x: vec![qr(1, 3)], value: qr(1, 3) });
    }
}
