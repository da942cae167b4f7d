// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact rational helpers on top of `num_rational::BigRational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Parses `p`, `p/q` or a finite decimal such as `0.2265`.
pub fn parse(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = ip.starts_with('-');
        let ipn: BigInt = if ip.is_empty() || ip == "-" { BigInt::zero() } else { ip.parse().ok()? };
        let fpn: BigInt = fp.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), fp.len());
        let frac = Q::new(fpn, scale);
        let base = Q::from_integer(ipn.abs());
        let v = base + frac;
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

/// `p/q` string, or `p` for integers.
pub fn fmt(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: scale down by bit length.
        let nb = x.numer().bits() as i64;
        let db = x.denom().bits() as i64;
        let shift = (nb.max(db) - 1000).max(0) as usize;
        let n = (x.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (x.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact dyadic rational equal to a finite `f64`.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite float")
}

pub fn floor(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - Q::from_integer(floor(x))
}

/// Rational approximation of `x` with denominator `den`, rounded to nearest.
pub fn round_to(x: &Q, den: i64) -> Q {
    let d = BigInt::from(den);
    let scaled = x * Q::from_integer(d.clone());
    let n = (scaled + qr(1, 2)).floor().to_integer();
    Q::new(n, d)
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6"), Some(qr(1, 2)));
        assert_eq!(parse("0.25"), Some(qr(1, 4)));
        assert_eq!(parse("-1.5"), Some(qr(-3, 2)));
        assert_eq!(parse("7"), Some(q(7)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn floor_and_frac() {
        assert_eq!(frac(&qr(-1, 3)), qr(2, 3));
        assert_eq!(floor(&qr(-1, 3)), BigInt::from(-1));
        assert_eq!(fmt(&qr(6, 4)), "3/2");
        assert_eq!(fmt(&q(-2)), "-2");
    }
}
