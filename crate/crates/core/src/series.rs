//! Truncated Laurent series over exact rationals or complex doubles.
//!
//! A series knows its window `[min_order, trunc)`: coefficients for every
//! exponent in the window are stored (possibly zero), everything at `trunc`
//! and beyond is unknown.  Arithmetic propagates windows, so truncation
//! bookkeeping is explicit rather than implied.

use num::complex::Complex64;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{rational_sqrt, Rational};

/// Coefficient ring for series arithmetic.
pub trait Coeff: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sqrt(&self) -> Option<Self>;
    /// Treated as zero for leading-order detection.
    fn is_negligible(&self) -> bool;
}

impl Coeff for Rational {
    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as One>::one()
    }
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(n.into())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

/// Absolute threshold below which a complex coefficient counts as zero
/// when detecting leading orders of numeric local expansions.
pub const NUMERIC_ZERO: f64 = 1e-11;

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sqrt(&self) -> Option<Self> {
        Some(Complex64::sqrt(*self))
    }
    fn is_negligible(&self) -> bool {
        self.norm() < NUMERIC_ZERO
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series<C: Coeff> {
    min_order: i64,
    coeffs: Vec<C>, // exponent min_order + i
    trunc: i64,     // exclusive
}

pub type RationalSeries = Series<Rational>;
pub type ComplexSeries = Series<Complex64>;

impl<C: Coeff> Series<C> {
    pub fn new(min_order: i64, coeffs: Vec<C>, trunc: i64) -> Self {
        assert_eq!(coeffs.len() as i64, trunc - min_order, "window mismatch");
        Series {
            min_order,
            coeffs,
            trunc,
        }
    }

    pub fn zero_window(min_order: i64, trunc: i64) -> Self {
        Series::new(
            min_order,
            vec![C::zero(); (trunc - min_order).max(0) as usize],
            trunc.max(min_order),
        )
    }

    /// Polynomial-style constructor: coefficients for t^0, t^1, ...
    pub fn from_coeffs(coeffs: Vec<C>, trunc: i64) -> Self {
        let mut c = coeffs;
        assert!(trunc >= c.len() as i64);
        c.resize((trunc) as usize, C::zero());
        Series::new(0, c, trunc)
    }

    pub fn constant(c: C, trunc: i64) -> Self {
        Self::from_coeffs(vec![c], trunc)
    }

    /// c * t^k within the window [k, trunc).
    pub fn monomial(c: C, k: i64, trunc: i64) -> Self {
        let mut s = Self::zero_window(k, trunc);
        if !s.coeffs.is_empty() {
            s.coeffs[0] = c;
        }
        s
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn min_order(&self) -> i64 {
        self.min_order
    }

    pub fn coeff(&self, k: i64) -> C {
        if k < self.min_order || k >= self.trunc {
            C::zero()
        } else {
            self.coeffs[(k - self.min_order) as usize].clone()
        }
    }

    pub fn set_coeff(&mut self, k: i64, c: C) {
        assert!(
            k >= self.min_order && k < self.trunc,
            "coefficient index outside the window"
        );
        self.coeffs[(k - self.min_order) as usize] = c;
    }

    /// Leading exponent of the first non-negligible coefficient, if any.
    pub fn leading_order(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_negligible())
            .map(|i| self.min_order + i as i64)
    }

    pub fn is_zero_to_trunc(&self) -> bool {
        self.leading_order().is_none()
    }

    fn align(a: &Self, b: &Self) -> (Self, Self) {
        let min = a.min_order.min(b.min_order);
        let trunc = a.trunc.min(b.trunc);
        (a.rewindow(min, trunc), b.rewindow(min, trunc))
    }

    pub fn rewindow(&self, min: i64, trunc: i64) -> Self {
        let mut out = Self::zero_window(min, trunc);
        for i in 0..out.coeffs.len() {
            let k = min + i as i64;
            // below our min the series is exactly zero; at/above trunc unknown
            out.coeffs[i] = if k < self.trunc { self.coeff(k) } else { C::zero() };
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let (mut a, b) = Self::align(self, o);
        for i in 0..a.coeffs.len() {
            a.coeffs[i] = a.coeffs[i].add(&b.coeffs[i]);
        }
        a
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Series {
            min_order: self.min_order,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        Series {
            min_order: self.min_order,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = self.trim();
        let b = o.trim();
        let min = a.min_order + b.min_order;
        let trunc = (a.trunc + b.min_order).min(b.trunc + a.min_order);
        let mut out = Self::zero_window(min, trunc);
        for (i, ca) in a.coeffs.iter().enumerate() {
            if ca.is_negligible() {
                continue;
            }
            let ka = a.min_order + i as i64;
            for (j, cb) in b.coeffs.iter().enumerate() {
                let k = ka + b.min_order + j as i64;
                if k >= trunc {
                    break;
                }
                let idx = (k - min) as usize;
                out.coeffs[idx] = out.coeffs[idx].add(&ca.mul(cb));
            }
        }
        out
    }

    /// Drops leading coefficients that are exactly/negligibly zero.
    pub fn trim(&self) -> Self {
        match self.leading_order() {
            None => Self::zero_window(self.trunc, self.trunc),
            Some(k) if k == self.min_order => self.clone(),
            Some(k) => Series {
                min_order: k,
                coeffs: self.coeffs[(k - self.min_order) as usize..].to_vec(),
                trunc: self.trunc,
            },
        }
    }

    /// Multiplicative inverse; needs a detectable leading coefficient.
    pub fn inv(&self) -> Result<Self> {
        let a = self.trim();
        if a.coeffs.is_empty() || a.coeffs[0].is_negligible() {
            return Err(Error::DegenerateMap("series has no leading term".into()));
        }
        let m = a.min_order;
        let n = a.coeffs.len();
        let lead = a.coeffs[0].clone();
        let mut inv = vec![C::zero(); n];
        inv[0] = C::one().div(&lead);
        for k in 1..n {
            // sum_{j=1..k} a_j * inv_{k-j} = -a_0 * inv_k
            let mut s = C::zero();
            for j in 1..=k {
                s = s.add(&a.coeffs[j].mul(&inv[k - j]));
            }
            inv[k] = s.neg().div(&lead);
        }
        Ok(Series::new(-m, inv, -m + n as i64))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    /// Term-by-term derivative in the series variable.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero_window(self.min_order - 1, self.trunc - 1);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.min_order + i as i64;
            if k == 0 {
                continue;
            }
            out.coeffs[i] = c.mul(&C::from_i64(k));
        }
        out
    }

    /// Square root; leading order must be even and the leading coefficient
    /// must have a square root in the coefficient ring.
    pub fn sqrt(&self) -> Result<Self> {
        let a = self.trim();
        if a.coeffs.is_empty() {
            return Err(Error::DegenerateMap("sqrt of zero series".into()));
        }
        if a.min_order % 2 != 0 {
            return Err(Error::DegenerateMap("sqrt of odd-order series".into()));
        }
        let lead = a.coeffs[0].clone();
        let s0 = lead
            .sqrt()
            .ok_or_else(|| Error::DegenerateMap("leading coefficient has no square root".into()))?;
        let n = a.coeffs.len();
        let mut s = vec![C::zero(); n];
        s[0] = s0.clone();
        let two = C::from_i64(2);
        for k in 1..n {
            // a_k = sum_{i+j=k} s_i s_j  =>  s_k = (a_k - sum_{i=1..k-1} s_i s_{k-i}) / (2 s_0)
            let mut acc = a.coeffs[k].clone();
            for i in 1..k {
                acc = acc.sub(&s[i].mul(&s[k - i]));
            }
            s[k] = acc.div(&two.mul(&s0));
        }
        Ok(Series::new(
            a.min_order / 2,
            s,
            a.min_order / 2 + n as i64,
        ))
    }

    /// Composition self(g); g must vanish at 0 (min_order >= 1) and self must
    /// be a power series (min_order >= 0).
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if self.min_order < 0 {
            return Err(Error::DegenerateMap("composition of a Laurent series".into()));
        }
        let gt = g.trim();
        if gt.min_order < 1 {
            return Err(Error::DegenerateMap(
                "inner series must vanish at the origin".into(),
            ));
        }
        let trunc = self.trunc.min(gt.trunc);
        let mut acc = Series::zero_window(0, trunc);
        for k in (0..self.trunc).rev() {
            acc = acc.mul(&gt.rewindow(gt.min_order, trunc));
            acc = acc.rewindow(0, trunc);
            acc.coeffs[0] = acc.coeffs[0].add(&self.coeff(k));
        }
        Ok(acc)
    }

    /// Compositional inverse of x = c1 t + c2 t^2 + ... with c1 invertible.
    pub fn reversion(&self) -> Result<Self> {
        let x = self.trim();
        if x.min_order != 1 {
            return Err(Error::DegenerateMap(
                "reversion needs a simple zero at the origin".into(),
            ));
        }
        let trunc = x.trunc;
        let c1 = x.coeffs[0].clone();
        // Newton: g <- g - (x(g) - t) / x'(g)
        let mut g = Series::monomial(C::one().div(&c1), 1, 2);
        let xp = x.derivative();
        loop {
            let cur = g.trunc;
            if cur >= trunc {
                break;
            }
            let next = (cur * 2).min(trunc);
            g = g.rewindow(1, next);
            let fg = x.rewindow(0, next + 1).compose(&g)?;
            let t = Series::monomial(C::one(), 1, next);
            let err = fg.rewindow(1, next).sub(&t);
            let denom = xp.rewindow(0, next).compose(&g)?;
            g = g.sub(&err.div(&denom)?.rewindow(1, next));
        }
        Ok(g.rewindow(1, trunc))
    }
}

/// Invariant Schwarzian bracket of a series map x(t):
/// x'''/x'^3 - (3/2) x''^2 / x'^4.  Output truncation is input - 3 (by
/// construction three derivatives are consumed).
pub fn schwarzian_bracket<C: Coeff>(x: &Series<C>) -> Result<Series<C>> {
    let d1 = x.derivative();
    if d1.is_zero_to_trunc() {
        return Err(Error::DegenerateMap("map has identically zero derivative".into()));
    }
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let d1_2 = d1.mul(&d1);
    let d1_3 = d1_2.mul(&d1);
    let d1_4 = d1_2.mul(&d1_2);
    let a = d3.div(&d1_3)?;
    let b = d2.mul(&d2).div(&d1_4)?;
    let mut out = a.sub(&b.scale(&C::from_i64(3).div(&C::from_i64(2))));
    // clamp the window to the documented guarantee
    let target = x.trunc - 3 - 2 * (x.min_order - 1).min(0);
    if out.trunc > target {
        out = out.rewindow(out.min_order.min(target), target.max(out.min_order.min(target)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_i64, q_ratio};

    fn rs(coeffs: &[i64], trunc: i64) -> RationalSeries {
        Series::from_coeffs(coeffs.iter().map(|&n| q_i64(n)).collect(), trunc)
    }

    #[test]
    fn mul_div_round_trip() {
        let a = rs(&[1, 2, 3, 4], 8);
        let b = rs(&[0, 1, 1], 8).trim();
        let c = a.mul(&b);
        let d = c.div(&b).unwrap();
        for k in 0..d.trunc() {
            assert_eq!(d.coeff(k), a.coeff(k), "k={k}");
        }
    }

    #[test]
    fn schwarzian_of_identity_and_moebius() {
        // x = t
        let x = rs(&[0, 1], 12);
        let s = schwarzian_bracket(&x).unwrap();
        assert!(s.is_zero_to_trunc());
        // x = (2t+1)/(t+1) = 1 + t - t^2 + t^3 - ...
        let num = rs(&[1, 2], 12);
        let den = rs(&[1, 1], 12);
        let x = num.div(&den).unwrap();
        let s = schwarzian_bracket(&x).unwrap();
        assert!(s.is_zero_to_trunc(), "{s:?}");
    }

    #[test]
    fn schwarzian_of_branch_model() {
        // x = E + t^2 -> [x,t] = -(3/8) t^-4 exactly
        let mut x = Series::zero_window(0, 10);
        x.coeffs[0] = q_i64(5);
        x.coeffs[2] = q_i64(1);
        let s = schwarzian_bracket(&x).unwrap();
        assert_eq!(s.coeff(-4), q_ratio(-3, 8));
        for k in -3..s.trunc() {
            assert_eq!(s.coeff(k), q_i64(0), "k={k}");
        }
    }

    #[test]
    fn sqrt_square_round_trip() {
        let a = rs(&[1, 2, 3], 9);
        let sq = a.mul(&a);
        let r = sq.sqrt().unwrap();
        for k in 0..r.trunc() {
            assert_eq!(r.coeff(k), a.coeff(k));
        }
        // even-order Laurent: t^2 (1 + t)
        let b = Series::new(2, vec![q_i64(1), q_i64(1)], 4);
        let r = b.sqrt().unwrap();
        assert_eq!(r.min_order(), 1);
        assert_eq!(r.coeff(1), q_i64(1));
        assert_eq!(r.coeff(2), q_ratio(1, 2));
    }

    #[test]
    fn reversion_inverts() {
        let x = rs(&[0, 2, 1, -3, 5], 9).trim();
        let g = x.reversion().unwrap();
        let comp = x.rewindow(0, 9).compose(&g).unwrap();
        assert_eq!(comp.coeff(1), q_i64(1));
        for k in 2..comp.trunc() {
            assert_eq!(comp.coeff(k), q_i64(0), "k={k}");
        }
    }

    #[test]
    fn inverse_schwarzian_relation() {
        // -x'^2 {t,x} = {x,t} with both sides composed back to the t-side:
        // bracket of the inverse map, composed with x, times x'^2, equals
        // the negative classical Schwarzian of x.  In bracket form:
        // [x,t] = -[t,x](x(t)) * (x'(t))^-2 * ... checked via series.
        let x = rs(&[0, 1, 1, 2, -1, 3, 0, 1], 10).trim();
        let inv = x.reversion().unwrap();
        // {x,t} = [x,t] * x'^2
        let sx = schwarzian_bracket(&x).unwrap();
        let d1 = x.derivative();
        let classical_x = sx.mul(&d1).mul(&d1); // {x,t}
        let st = schwarzian_bracket(&inv).unwrap();
        let d1t = inv.derivative();
        let classical_t = st.mul(&d1t).mul(&d1t); // {t,x}
        let composed = classical_t.rewindow(0, classical_t.trunc()).compose(&x.rewindow(1, x.trunc())).unwrap();
        let lhs = composed.mul(&d1).mul(&d1).neg();
        let window = lhs.trunc().min(classical_x.trunc());
        assert!(window >= 3, "window too small: {window}");
        for k in 0..window {
            assert_eq!(lhs.coeff(k), classical_x.coeff(k), "k={k}");
        }
    }
}
