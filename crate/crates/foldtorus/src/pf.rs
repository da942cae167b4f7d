// SPDX-License-Identifier: MIT OR Apache-2.0

//! Certified Perron–Frobenius enclosures for nonnegative integer matrices.
//!
//! For any positive vector `x` and nonnegative `A`,
//! `min_i (Ax)_i / x_i <= rho(A) <= max_i (Ax)_i / x_i`. A floating-point
//! power iteration supplies a good `x`; the bounds themselves are exact.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::rational::{self, Q};

/// Sparse nonnegative integer matrix in row form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SparseMat {
    pub n: usize,
    pub rows: Vec<Vec<(usize, u64)>>,
}

impl SparseMat {
    pub fn from_dense(a: &[Vec<u64>]) -> Self {
        let rows =
            a.iter().map(|r| r.iter().enumerate().filter(|(_, v)| **v > 0).map(|(j, v)| (j, *v)).collect()).collect();
        SparseMat { n: a.len(), rows }
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut d = vec![vec![0; self.n]; self.n];
        for (i, r) in self.rows.iter().enumerate() {
            for (j, v) in r {
                d[i][*j] += *v;
            }
        }
        d
    }

    fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(j, v)| *v as f64 * x[*j]).sum()).collect()
    }

    fn apply_int(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.rows.iter().map(|r| r.iter().map(|(j, v)| &x[*j] * BigInt::from(*v)).sum()).collect()
    }
}

/// Certified enclosure `lo <= rho(A) <= hi`.
#[derive(Clone, Debug, Serialize)]
pub struct PfEnclosure {
    #[serde(serialize_with = "crate::report::ser_q")]
    pub lo: Q,
    #[serde(serialize_with = "crate::report::ser_q")]
    pub hi: Q,
    /// Positive test vector, normalised to sum 1 (rounded decimal form).
    pub vector: Vec<f64>,
    /// Widths of the successive enclosures, one per exact step.
    pub widths: Vec<f64>,
}

impl PfEnclosure {
    pub fn mid(&self) -> f64 {
        (rational::to_f64(&self.lo) + rational::to_f64(&self.hi)) / 2.0
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        rational::to_f64(&self.lo) <= x && x <= rational::to_f64(&self.hi)
    }
}

fn float_vector(a: &SparseMat, iters: usize) -> Vec<f64> {
    let n = a.n;
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let ax = a.apply_f64(&x);
        let mut y: Vec<f64> = x.iter().zip(&ax).map(|(xi, ai)| xi + ai).collect();
        let s: f64 = y.iter().sum();
        if s == 0.0 || !s.is_finite() {
            break;
        }
        for v in y.iter_mut() {
            *v /= s;
        }
        let diff = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = y;
        if diff < 1e-17 {
            break;
        }
    }
    x
}

/// Least and greatest ratio `(Ax)_i / x_i`, compared by cross-multiplication.
fn cw_bounds(a: &SparseMat, x: &[BigInt]) -> (Q, Q) {
    let ax = a.apply_int(x);
    let (mut lo, mut hi) = (0, 0);
    for i in 1..x.len() {
        if &ax[i] * &x[lo] < &ax[lo] * &x[i] {
            lo = i;
        }
        if &ax[i] * &x[hi] > &ax[hi] * &x[i] {
            hi = i;
        }
    }
    (Q::new(ax[lo].clone(), x[lo].clone()), Q::new(ax[hi].clone(), x[hi].clone()))
}

/// Encloses the spectral radius of `a` to width at most `target` when
/// possible, using at most `max_steps` exact refinement steps.
pub fn enclose(a: &SparseMat, target: &Q, max_steps: usize) -> PfEnclosure {
    let n = a.n;
    if n == 0 {
        return PfEnclosure { lo: Q::zero(), hi: Q::zero(), vector: vec![], widths: vec![] };
    }
    let xf = float_vector(a, 20_000);
    let floor = 1e-9 / n as f64;
    let scale = (1u64 << 40) as f64;
    let mut x: Vec<BigInt> = xf.iter().map(|v| BigInt::from(((v.max(floor) * scale).round() as u64).max(1))).collect();
    let (mut lo, mut hi) = cw_bounds(a, &x);
    let mut widths = vec![rational::to_f64(&(&hi - &lo))];
    let mut steps = 0;
    while &hi - &lo > *target && steps < max_steps {
        // Any positive vector gives valid bounds; keep the best seen.
        let ax = a.apply_int(&x);
        x = x.iter().zip(ax).map(|(p, q)| p + q).collect();
        let bits = x.iter().map(|v| v.bits()).max().unwrap_or(0);
        if bits > 96 {
            let shift = bits - 64;
            x = x.into_iter().map(|v| (v >> shift).max(BigInt::one())).collect();
        }
        let (l, h) = cw_bounds(a, &x);
        if l > lo {
            lo = l;
        }
        if h < hi {
            hi = h;
        }
        widths.push(rational::to_f64(&(&hi - &lo)));
        steps += 1;
    }
    let total: BigInt = x.iter().sum();
    let vector = x.iter().map(|v| Q::new(v.clone(), total.clone()).to_f64().unwrap_or(0.0)).collect();
    PfEnclosure { lo, hi, vector, widths }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    #[test]
    fn permutation_is_exactly_one() {
        let a = SparseMat::from_dense(&[vec![0, 1], vec![1, 0]]);
        let e = enclose(&a, &qr(1, 1_000_000), 10);
        assert_eq!(e.lo, Q::one());
        assert_eq!(e.hi, Q::one());
    }

    #[test]
    fn golden_ratio_enclosed() {
        let a = SparseMat::from_dense(&[vec![1, 1], vec![1, 0]]);
        let e = enclose(&a, &qr(1, 1_000_000_000), 50);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(e.contains_f64(phi));
        // Exact oracle: lo^2 - lo - 1 <= 0 <= hi^2 - hi - 1.
        let f = |x: &Q| x * x - x - Q::one();
        assert!(f(&e.lo) <= Q::zero() && f(&e.hi) >= Q::zero());
    }
}
