//! Arbitrary-precision rationals and small helpers on top of `num`.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The scalar coefficient type used throughout the symbolic layer.
pub type Rational = BigRational;

pub fn q_i64(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn q_ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses "p/q" or "p" (optionally signed).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad integer `{t}`")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(parse_int(p)?, den))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

/// Canonical "p/q" (or "p" when integral) form.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Fall back through a quotient of truncated parts for huge entries.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn rational_to_c64(q: &Rational) -> Complex64 {
    Complex64::new(rational_to_f64(q), 0.0)
}

/// gcd on rationals: gcd(a/b, c/d) = gcd(a,c)/lcm(b,d). Used for content extraction.
pub fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let num = num::Integer::gcd(a.numer(), b.numer());
    let den = num::Integer::lcm(a.denom(), b.denom());
    Rational::new(num, den)
}

/// Rough log2 of |q| (bit-length difference); 0 for zero.
pub fn log2_estimate(q: &Rational) -> i64 {
    if q.is_zero() {
        return 0;
    }
    q.numer().bits() as i64 - q.denom().bits() as i64
}

/// q / 2^shift as f64, with the shift applied exactly on the integers so
/// astronomically large coefficients stay representable.
pub fn to_f64_shifted(q: &Rational, shift: i64) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let mut n = q.numer().clone();
    let mut d = q.denom().clone();
    if shift > 0 {
        d <<= shift as usize;
    } else if shift < 0 {
        n <<= (-shift) as usize;
    }
    // drop common low precision so the conversion cannot overflow
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let excess = (nb.min(db) - 128).max(0);
    if excess > 0 {
        n >>= excess as usize;
        d >>= excess as usize;
    }
    let nf = n.to_f64().unwrap_or(f64::MAX);
    let df = d.to_f64().unwrap_or(f64::MAX);
    nf / df
}

/// Exact square root when the rational is a perfect square of a rational.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let ns = q.numer().sqrt();
    let ds = q.denom().sqrt();
    if &(&ns * &ns) == q.numer() && &(&ds * &ds) == q.denom() {
        Some(Rational::new(ns, ds))
    } else {
        None
    }
}
