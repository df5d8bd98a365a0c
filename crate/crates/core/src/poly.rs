//! Sparse multivariate polynomials over arbitrary-precision rationals.
//!
//! Terms are kept in graded-lexicographic order with respect to the
//! polynomial's variable list (variables are stored sorted by name, so any
//! two polynomials can be aligned onto the union of their variables).
//! Resultants use the subresultant pseudo-remainder sequence; a
//! fraction-free Bareiss determinant of the Sylvester matrix serves as the
//! reference oracle in the tests.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num::complex::Complex64;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, rational_gcd, rational_to_c64, Rational};

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => self.0.cmp(&other.0),
            o => o,
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: BTreeMap<Mono, Rational>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        let a = self.compress_vars();
        let b = other.compress_vars();
        a.vars == b.vars && a.terms == b.terms
    }
}

impl Eq for MultiPoly {}

impl MultiPoly {
    pub fn zero(vars: &[&str]) -> Self {
        let mut vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        vars.sort();
        vars.dedup();
        MultiPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[&str], c: Rational) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.insert(Mono(vec![0; p.vars.len()]), c);
        }
        p
    }

    pub fn one_poly(vars: &[&str]) -> Self {
        Self::constant(vars, Rational::one())
    }

    pub fn var(name: &str) -> Self {
        let mut p = Self::zero(&[name]);
        p.terms.insert(Mono(vec![1]), Rational::one());
        p
    }

    /// Monomial c * v^e in a single variable.
    pub fn monomial(name: &str, e: u32, c: Rational) -> Self {
        let mut p = Self::zero(&[name]);
        if !c.is_zero() {
            p.terms.insert(Mono(vec![e]), c);
        }
        p
    }

    pub fn from_terms(vars: &[&str], terms: Vec<(Vec<u32>, Rational)>) -> Self {
        let mut p = Self::zero(vars);
        assert_eq!(
            p.vars.len(),
            vars.len(),
            "from_terms requires sorted, distinct variables"
        );
        for (e, c) in terms {
            assert_eq!(e.len(), p.vars.len());
            if !c.is_zero() {
                let entry = p.terms.entry(Mono(e)).or_insert_with(Rational::zero);
                *entry += c;
            }
        }
        p.terms.retain(|_, c| !c.is_zero());
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.leading().0.total_degree() == 0)
    }

    /// The constant value; zero polynomial gives 0, fails on non-constants.
    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.is_constant() {
            return Some(self.terms.values().next().unwrap().clone());
        }
        None
    }

    /// Leading (graded-lex greatest) term.
    pub fn leading(&self) -> (&Mono, &Rational) {
        self.terms.iter().next_back().expect("leading of zero")
    }

    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    pub fn degree(&self, var: &str) -> u32 {
        match self.var_index(var) {
            None => 0,
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap_or(0),
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    /// Degree weighted by `weights[i]` per variable (same order as `vars`).
    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.terms
            .keys()
            .map(|m| m.0.iter().zip(weights).map(|(e, w)| e * w).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn uses_var(&self, var: &str) -> bool {
        self.degree(var) > 0
    }

    /// Extends the variable list (no-op for variables already present).
    pub fn extend_vars(&self, extra: &[&str]) -> MultiPoly {
        let mut all: Vec<String> = self.vars.clone();
        for v in extra {
            all.push(v.to_string());
        }
        all.sort();
        all.dedup();
        if all == self.vars {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| all.iter().position(|w| w == v).unwrap())
            .collect();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut e = vec![0u32; all.len()];
            for (i, exp) in m.0.iter().enumerate() {
                e[map[i]] = *exp;
            }
            terms.insert(Mono(e), c.clone());
        }
        MultiPoly { vars: all, terms }
    }

    /// Puts both polynomials over the union of their variables.
    pub fn align(a: &MultiPoly, b: &MultiPoly) -> (MultiPoly, MultiPoly) {
        let bv: Vec<&str> = b.vars.iter().map(|s| s.as_str()).collect();
        let av: Vec<&str> = a.vars.iter().map(|s| s.as_str()).collect();
        (a.extend_vars(&bv), b.extend_vars(&av))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Rational) -> Rational) -> MultiPoly {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                terms.insert(m.clone(), v);
            }
        }
        MultiPoly {
            vars: self.vars.clone(),
            terms,
        }
    }

    pub fn neg(&self) -> MultiPoly {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let (mut a, b) = MultiPoly::align(self, other);
        for (m, c) in b.terms {
            let entry = a.terms.entry(m).or_insert_with(Rational::zero);
            *entry += c;
        }
        a.terms.retain(|_, c| !c.is_zero());
        a
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let (a, b) = MultiPoly::align(self, other);
        let mut out = MultiPoly {
            vars: a.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let e: Vec<u32> = ma.0.iter().zip(&mb.0).map(|(x, y)| x + y).collect();
                let c = ca * cb;
                let entry = out.terms.entry(Mono(e)).or_insert_with(Rational::zero);
                *entry += c;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly {
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            };
        }
        self.map_coeffs(|x| x * c)
    }

    pub fn pow(&self, mut e: u32) -> MultiPoly {
        let mut base = self.clone();
        let mut acc = MultiPoly::constant(
            &self.vars.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            Rational::one(),
        );
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact division; fails with `InexactDivision` when the remainder is nonzero.
    pub fn exact_div(&self, divisor: &MultiPoly) -> Result<MultiPoly> {
        if divisor.is_zero() {
            return Err(Error::InexactDivision("division by zero".into()));
        }
        let (mut r, d) = MultiPoly::align(self, divisor);
        let vars = r.vars.clone();
        let mut q = MultiPoly {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        };
        let (dm, dc) = {
            let (m, c) = d.leading();
            (m.clone(), c.clone())
        };
        while !r.is_zero() {
            let (rm, rc) = {
                let (m, c) = r.leading();
                (m.clone(), c.clone())
            };
            let mut e = Vec::with_capacity(rm.0.len());
            for (a, b) in rm.0.iter().zip(&dm.0) {
                if a < b {
                    return Err(Error::InexactDivision(r.to_string()));
                }
                e.push(a - b);
            }
            let qc = &rc / &dc;
            let qt = MultiPoly {
                vars: vars.clone(),
                terms: BTreeMap::from([(Mono(e), qc)]),
            };
            r = r.sub(&qt.mul(&d));
            q = q.add(&qt);
        }
        Ok(q)
    }

    pub fn derivative(&self, var: &str) -> MultiPoly {
        let Some(i) = self.var_index(var) else {
            return MultiPoly {
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            };
        };
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e > 0 {
                let mut v = m.0.clone();
                v[i] = e - 1;
                terms.insert(Mono(v), c * Rational::from_integer(e.into()));
            }
        }
        MultiPoly {
            vars: self.vars.clone(),
            terms,
        }
    }

    /// gcd of all coefficients (nonnegative rational).
    pub fn content(&self) -> Rational {
        let mut g = Rational::zero();
        for c in self.terms.values() {
            g = rational_gcd(&g, c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Scales to integer coefficients with content 1 and positive leading coefficient.
    pub fn normalize_primitive(&self) -> MultiPoly {
        if self.is_zero() {
            return self.clone();
        }
        let c = self.content();
        let mut p = self.map_coeffs(|x| x / &c);
        if p.leading().1.is_negative() {
            p = p.neg();
        }
        p
    }

    /// Componentwise minimum exponent vector (the monomial content).
    pub fn monomial_content(&self) -> Option<Mono> {
        let mut it = self.terms.keys();
        let first = it.next()?.0.clone();
        let min = it.fold(first, |acc, m| {
            acc.iter().zip(&m.0).map(|(a, b)| (*a).min(*b)).collect()
        });
        Some(Mono(min))
    }

    pub fn div_monomial(&self, m: &Mono) -> MultiPoly {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e: Vec<u32> = k.0.iter().zip(&m.0).map(|(a, b)| a - b).collect();
            terms.insert(Mono(e), c.clone());
        }
        MultiPoly {
            vars: self.vars.clone(),
            terms,
        }
    }

    /// View as a univariate polynomial in `var`: ascending coefficient list.
    /// Coefficients keep the full variable list with `var`-exponent zero.
    pub fn univariate_in(&self, var: &str) -> Vec<MultiPoly> {
        let p = self.extend_vars(&[var]);
        let i = p.var_index(var).unwrap();
        let deg = p.degree(var) as usize;
        let mut coeffs =
            vec![
                MultiPoly {
                    vars: p.vars.clone(),
                    terms: BTreeMap::new()
                };
                deg + 1
            ];
        for (m, c) in &p.terms {
            let e = m.0[i] as usize;
            let mut v = m.0.clone();
            v[i] = 0;
            coeffs[e].terms.insert(Mono(v), c.clone());
        }
        coeffs
    }

    pub fn from_univariate(var: &str, coeffs: &[MultiPoly]) -> MultiPoly {
        let mut acc = MultiPoly::zero(&[var]);
        let x = MultiPoly::var(var);
        for (e, c) in coeffs.iter().enumerate() {
            acc = acc.add(&c.mul(&x.pow(e as u32)));
        }
        acc
    }

    /// Substitutes a polynomial for a variable.
    pub fn substitute(&self, var: &str, value: &MultiPoly) -> MultiPoly {
        if self.var_index(var).is_none() {
            return self.clone();
        }
        let coeffs = self.univariate_in(var);
        // Horner
        let mut acc = MultiPoly::zero(&[]);
        for c in coeffs.iter().rev() {
            acc = acc.mul(value).add(c);
        }
        // drop the now-unused variable if absent
        acc.compress_vars()
    }

    /// Removes variables that no longer occur.
    pub fn compress_vars(&self) -> MultiPoly {
        let used: Vec<usize> = (0..self.vars.len())
            .filter(|&i| self.terms.keys().any(|m| m.0[i] > 0))
            .collect();
        if used.len() == self.vars.len() {
            return self.clone();
        }
        let vars: Vec<String> = used.iter().map(|&i| self.vars[i].clone()).collect();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e: Vec<u32> = used.iter().map(|&i| m.0[i]).collect();
            terms.insert(Mono(e), c.clone());
        }
        MultiPoly { vars, terms }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> MultiPoly {
        if from == to || self.var_index(from).is_none() {
            return self.clone();
        }
        assert!(
            self.var_index(to).is_none(),
            "rename target already present"
        );
        let mut vars = self.vars.clone();
        let i = self.var_index(from).unwrap();
        vars[i] = to.to_string();
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..vars.len()).collect();
            idx.sort_by(|&a, &b| vars[a].cmp(&vars[b]));
            idx
        };
        let sorted_vars: Vec<String> = order.iter().map(|&i| vars[i].clone()).collect();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e: Vec<u32> = order.iter().map(|&i| m.0[i]).collect();
            terms.insert(Mono(e), c.clone());
        }
        MultiPoly {
            vars: sorted_vars,
            terms,
        }
    }

    /// Horner-style evaluation, one variable at a time.
    pub fn eval_complex(&self, point: &dyn Fn(&str) -> Complex64) -> Complex64 {
        fn eval_rec(coeffs: &[MultiPoly], vars: &[String], point: &dyn Fn(&str) -> Complex64) -> Complex64 {
            // coeffs are univariate coefficients in vars[0]
            let x = point(&vars[0]);
            let mut acc = Complex64::new(0.0, 0.0);
            for c in coeffs.iter().rev() {
                let cv = if vars.len() == 1 {
                    c.constant_value()
                        .map(|q| rational_to_c64(&q))
                        .unwrap_or_else(|| Complex64::new(0.0, 0.0))
                } else {
                    let sub = c.compress_vars();
                    if sub.vars.is_empty() {
                        sub.constant_value()
                            .map(|q| rational_to_c64(&q))
                            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
                    } else {
                        let inner = sub.univariate_in(&sub.vars[0].clone());
                        let vs = sub.vars.clone();
                        eval_rec(&inner, &vs, point)
                    }
                };
                acc = acc * x + cv;
            }
            acc
        }
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        if self.vars.is_empty() || self.is_constant() {
            return rational_to_c64(&self.constant_value().unwrap());
        }
        let coeffs = self.univariate_in(&self.vars[0].clone());
        eval_rec(&coeffs, &self.vars.clone(), point)
    }

    pub fn eval_rational(&self, point: &dyn Fn(&str) -> Rational) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.0.iter().enumerate() {
                for _ in 0..*e {
                    t *= point(&self.vars[i]);
                }
            }
            acc += t;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// gcd
// ---------------------------------------------------------------------------

fn deg_strip(coeffs: &mut Vec<MultiPoly>) {
    while let Some(last) = coeffs.last() {
        if last.is_zero() && coeffs.len() > 1 {
            coeffs.pop();
        } else if last.is_zero() {
            coeffs.clear();
            break;
        } else {
            break;
        }
    }
}

fn uni_is_zero(coeffs: &[MultiPoly]) -> bool {
    coeffs.iter().all(|c| c.is_zero())
}

/// Pseudo-remainder of univariate views: lc(b)^{da-db+1} * a mod b.
fn prem_uni(a: &[MultiPoly], b: &[MultiPoly]) -> Vec<MultiPoly> {
    let da = a.len() - 1;
    let db = b.len() - 1;
    assert!(da >= db && !uni_is_zero(b));
    let c = b[db].clone();
    let mut r: Vec<MultiPoly> = a.to_vec();
    let mut e = (da - db + 1) as i64;
    loop {
        deg_strip(&mut r);
        if r.is_empty() || uni_is_zero(&r) || r.len() - 1 < db {
            break;
        }
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let k = dr - db;
        let mut nr: Vec<MultiPoly> = Vec::with_capacity(dr);
        for i in 0..dr {
            let mut t = c.mul(&r[i]);
            if i >= k {
                t = t.sub(&lr.mul(&b[i - k]));
            }
            nr.push(t);
        }
        r = nr;
        e -= 1;
    }
    if e > 0 {
        let ce = c.pow(e as u32);
        for t in r.iter_mut() {
            *t = t.mul(&ce);
        }
    }
    if r.is_empty() {
        r.push(MultiPoly::zero(&[]));
    }
    r
}

/// Full content of a univariate view: gcd over all coefficients.
fn uni_content(coeffs: &[MultiPoly]) -> MultiPoly {
    let mut g = MultiPoly::zero(&[]);
    // start from the smallest coefficient to shrink quickly
    let mut sorted: Vec<&MultiPoly> = coeffs.iter().filter(|c| !c.is_zero()).collect();
    sorted.sort_by_key(|c| c.num_terms());
    for c in sorted {
        g = gcd_poly_inner(&g, c);
        if !g.is_zero() && g.is_constant() {
            return MultiPoly::one_poly(&[]);
        }
    }
    g
}

fn gcd_poly_inner(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.normalize_primitive();
    }
    if b.is_zero() {
        return a.normalize_primitive();
    }
    let a = a.compress_vars();
    let b = b.compress_vars();
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one_poly(&[]);
    }
    // main variable: the highest-named variable present in both, else content recursion
    let va: Vec<&String> = a.vars.iter().collect();
    let common: Vec<&String> = va.iter().filter(|v| b.uses_var(v)).cloned().collect();
    let Some(main) = common.last().cloned() else {
        // no common variable: gcd of contents only, which is a rational; normalized to 1
        return MultiPoly::one_poly(&[]);
    };
    let main = main.clone();
    let ua = a.univariate_in(&main);
    let ub = b.univariate_in(&main);
    let ca = uni_content(&ua);
    let cb = uni_content(&ub);
    let cg = gcd_poly_inner(&ca, &cb);
    let ppa: Vec<MultiPoly> = if ca.is_constant() {
        ua
    } else {
        ua.iter().map(|c| c.exact_div(&ca).unwrap()).collect()
    };
    let ppb: Vec<MultiPoly> = if cb.is_constant() {
        ub
    } else {
        ub.iter().map(|c| c.exact_div(&cb).unwrap()).collect()
    };
    // primitive PRS on the primitive parts; the gcd is the last nonzero element
    let (mut r0, mut r1) = if ppa.len() >= ppb.len() {
        (ppa, ppb)
    } else {
        (ppb, ppa)
    };
    while !uni_is_zero(&r1) {
        let mut rem = prem_uni(&r0, &r1);
        deg_strip(&mut rem);
        if uni_is_zero(&rem) {
            r0 = r1;
            break;
        }
        if rem.len() == 1 {
            // degree 0 remainder: the primitive parts are coprime
            return cg.normalize_primitive();
        }
        // keep the remainder primitive: polynomial content, then rational
        let c = uni_content(&rem);
        if !c.is_constant() {
            rem = rem.iter().map(|t| t.exact_div(&c).unwrap()).collect();
        }
        let mut rc = Rational::zero();
        for t in &rem {
            rc = rational_gcd(&rc, &t.content());
            if rc.is_one() {
                break;
            }
        }
        if !(rc.is_zero() || rc.is_one()) {
            rem = rem.iter().map(|t| t.map_coeffs(|x| x / &rc)).collect();
        }
        r0 = r1;
        r1 = rem;
    }
    let pp = MultiPoly::from_univariate(&main, &r0);
    let mut pp = pp.normalize_primitive();
    // make the result primitive w.r.t. the main variable as well
    let cont = uni_content(&pp.univariate_in(&main));
    if !cont.is_constant() {
        pp = pp.exact_div(&cont).unwrap();
    }
    cg.mul(&pp).normalize_primitive()
}

/// gcd, normalized integer-primitive with positive leading coefficient.
pub fn gcd_poly(a: &MultiPoly, b: &MultiPoly) -> Result<MultiPoly> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::UndefinedGcd);
    }
    Ok(gcd_poly_inner(a, b))
}

// ---------------------------------------------------------------------------
// resultants
// ---------------------------------------------------------------------------

/// Exact resultant of the univariate views `a`, `b` (coefficients ascending).
///
/// Uses pseudo-remainders with product-formula factor accounting:
/// Res(A,B) = (-1)^{mn} lc(B)^{m - p - n(d+1)} Res(B, prem(A,B)) with
/// p = deg prem, d = m - n, plus Res(B, k R) = k^n Res(B, R) for every
/// explicit scaling k.  All corrections are combined in one exact
/// multiply/divide at the end.
pub fn resultant_uni(a0: &[MultiPoly], b0: &[MultiPoly]) -> MultiPoly {
    let mut a = a0.to_vec();
    let mut b = b0.to_vec();
    deg_strip(&mut a);
    deg_strip(&mut b);
    if uni_is_zero(&a) || uni_is_zero(&b) {
        return MultiPoly::zero(&[]);
    }
    let mut sign = false;
    let mut pos: Vec<MultiPoly> = Vec::new();
    let mut neg: Vec<MultiPoly> = Vec::new();
    loop {
        let m = a.len() - 1;
        let n = b.len() - 1;
        if m < n {
            std::mem::swap(&mut a, &mut b);
            if m % 2 == 1 && n % 2 == 1 {
                sign = !sign;
            }
            continue;
        }
        if n == 0 {
            for _ in 0..m {
                pos.push(b[0].clone());
            }
            break;
        }
        let d = m - n;
        let c = b[n].clone();
        let mut rem = prem_uni(&a, &b);
        deg_strip(&mut rem);
        if uni_is_zero(&rem) {
            return MultiPoly::zero(&[]);
        }
        let p = rem.len() - 1;
        if m % 2 == 1 && n % 2 == 1 {
            sign = !sign;
        }
        // exponent of c: m - p - n(d+1), usually negative
        let e = m as i64 - p as i64 - (n * (d + 1)) as i64;
        if e >= 0 {
            for _ in 0..e {
                pos.push(c.clone());
            }
        } else {
            for _ in 0..(-e) {
                neg.push(c.clone());
            }
        }
        // keep remainders small: strip rational and monomial-free content
        let mut rc = Rational::zero();
        for t in &rem {
            rc = rational_gcd(&rc, &t.content());
            if rc.is_one() {
                break;
            }
        }
        if !(rc.is_zero() || rc.is_one()) {
            rem = rem.iter().map(|t| t.map_coeffs(|x| x / &rc)).collect();
            let k = MultiPoly::constant(&[], rc);
            for _ in 0..n {
                pos.push(k.clone());
            }
        }
        a = b;
        b = rem;
    }
    let mut num = MultiPoly::one_poly(&[]);
    for f in pos {
        num = num.mul(&f);
    }
    let mut den = MultiPoly::one_poly(&[]);
    for f in neg {
        den = den.mul(&f);
    }
    let mut res = num.exact_div(&den).expect("resultant correction division");
    if sign {
        res = res.neg();
    }
    res
}

/// Resultant with respect to `var`; subresultant-PRS based and exact.
pub fn resultant(a: &MultiPoly, b: &MultiPoly, var: &str) -> Result<MultiPoly> {
    if a.is_zero() || b.is_zero() {
        return Ok(MultiPoly::zero(&[]));
    }
    let da = a.degree(var);
    let db = b.degree(var);
    if da == 0 && db == 0 {
        return Err(Error::DegenerateResultant(var.to_string()));
    }
    let (aa, bb) = MultiPoly::align(a, b);
    Ok(resultant_uni(&aa.univariate_in(var), &bb.univariate_in(var)))
}

/// Reference resultant: fraction-free Bareiss elimination on the Sylvester matrix.
/// Exponential in nothing, cubic in the matrix size; used as the test oracle.
pub fn resultant_sylvester(a: &MultiPoly, b: &MultiPoly, var: &str) -> Result<MultiPoly> {
    if a.is_zero() || b.is_zero() {
        return Ok(MultiPoly::zero(&[]));
    }
    let m = a.degree(var) as usize;
    let n = b.degree(var) as usize;
    if m == 0 && n == 0 {
        return Err(Error::DegenerateResultant(var.to_string()));
    }
    if n == 0 {
        return Ok(b.pow(m as u32));
    }
    if m == 0 {
        return Ok(a.pow(n as u32));
    }
    let (aa, bb) = MultiPoly::align(a, b);
    let ua = aa.univariate_in(var);
    let ub = bb.univariate_in(var);
    let size = m + n;
    let zero = MultiPoly::zero(&[]);
    let mut mat = vec![vec![zero.clone(); size]; size];
    for i in 0..n {
        for (j, c) in ua.iter().enumerate() {
            mat[i][i + (m - j)] = c.clone();
        }
    }
    for i in 0..m {
        for (j, c) in ub.iter().enumerate() {
            mat[n + i][i + (n - j)] = c.clone();
        }
    }
    // Bareiss
    let mut sign = false;
    let mut prev = MultiPoly::one_poly(&[]);
    for k in 0..size - 1 {
        if mat[k][k].is_zero() {
            let Some(swap) = (k + 1..size).find(|&i| !mat[i][k].is_zero()) else {
                return Ok(MultiPoly::zero(&[]));
            };
            mat.swap(k, swap);
            sign = !sign;
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let t = mat[i][j].mul(&mat[k][k]).sub(&mat[i][k].mul(&mat[k][j]));
                mat[i][j] = t.exact_div(&prev).expect("bareiss exact division");
            }
        }
        for i in k + 1..size {
            mat[i][k] = zero.clone();
        }
        prev = mat[k][k].clone();
    }
    let mut det = mat[size - 1][size - 1].clone();
    if sign {
        det = det.neg();
    }
    Ok(det)
}

/// Square-free part with respect to `var`: distinct factors involving `var`,
/// content (everything free of `var`) removed.
pub fn squarefree_part(a: &MultiPoly, var: &str) -> Result<MultiPoly> {
    if a.is_zero() {
        return Err(Error::InvalidInput("squarefree part of zero".into()));
    }
    if a.degree(var) == 0 {
        return Ok(MultiPoly::one_poly(&[]));
    }
    let ua = a.univariate_in(var);
    let cont = uni_content(&ua);
    let pp = if cont.is_constant() {
        a.clone()
    } else {
        a.exact_div(&cont)?
    };
    let pp = pp.normalize_primitive();
    let d = pp.derivative(var);
    let g = gcd_poly(&pp, &d)?;
    let sf = pp.exact_div(&g)?;
    Ok(sf.normalize_primitive())
}

// ---------------------------------------------------------------------------
// parsing and display
// ---------------------------------------------------------------------------

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.vars[i].clone()),
                    _ => factors.push(format!("{}^{}", self.vars[i], e)),
                }
            }
            if factors.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", format_rational(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}
