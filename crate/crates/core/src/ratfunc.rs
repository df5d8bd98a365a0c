//! Reduced fractions of multivariate polynomials, plus the canonical
//! textual grammar used by the CLI and the JSON payloads.
//!
//! Normalization: gcd(num, den) = 1, denominator integer-primitive with a
//! positive leading coefficient in the graded-lex order.

use std::fmt;

use num::complex::Complex64;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{gcd_poly, MultiPoly};
use crate::rational::{parse_rational, Rational};

pub const DEFAULT_POLE_EPS: f64 = 1e-12;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    num: MultiPoly,
    den: MultiPoly,
}

impl RatFunc {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<RatFunc> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let mut f = RatFunc { num, den };
        f.reduce();
        Ok(f)
    }

    pub fn from_poly(p: MultiPoly) -> RatFunc {
        RatFunc {
            num: p,
            den: MultiPoly::one_poly(&[]),
        }
    }

    pub fn zero() -> RatFunc {
        Self::from_poly(MultiPoly::zero(&[]))
    }

    pub fn one() -> RatFunc {
        Self::from_poly(MultiPoly::one_poly(&[]))
    }

    pub fn constant(c: Rational) -> RatFunc {
        Self::from_poly(MultiPoly::constant(&[], c))
    }

    pub fn var(name: &str) -> RatFunc {
        Self::from_poly(MultiPoly::var(name))
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        match (self.num.constant_value(), self.den.constant_value()) {
            (Some(n), Some(d)) if !d.is_zero() => Some(n / d),
            _ => None,
        }
    }

    /// The polynomial itself when the denominator is trivial.
    pub fn expect_poly(&self) -> Result<MultiPoly> {
        if self.den.is_constant() {
            let d = self.den.constant_value().unwrap();
            Ok(self.num.map_coeffs(|c| c / &d))
        } else {
            Err(Error::InvalidInput(format!(
                "expected a polynomial, got denominator {}",
                self.den
            )))
        }
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = MultiPoly::one_poly(&[]);
            return;
        }
        let g = gcd_poly(&self.num, &self.den).expect("nonzero inputs");
        if !g.is_constant() {
            self.num = self.num.exact_div(&g).unwrap();
            self.den = self.den.exact_div(&g).unwrap();
        }
        // integer-primitive positive-leading denominator
        let c = self.den.content();
        let mut scale = c;
        if self.den.leading().1.is_negative() {
            scale = -scale;
        }
        self.den = self.den.map_coeffs(|x| x / &scale);
        self.num = self.num.map_coeffs(|x| x / &scale);
        self.num = self.num.compress_vars();
        self.den = self.den.compress_vars();
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        RatFunc::new(
            self.num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
        .unwrap()
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        RatFunc::new(self.num.mul(&other.num), self.den.mul(&other.den)).unwrap()
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        if other.is_zero() {
            return Err(Error::InvalidInput("division by zero rational function".into()));
        }
        RatFunc::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn inv(&self) -> Result<RatFunc> {
        RatFunc::one().div(self)
    }

    pub fn pow(&self, e: i32) -> Result<RatFunc> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = RatFunc::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        RatFunc::new(self.num.scale(c), self.den.clone()).unwrap()
    }

    pub fn derivative(&self, var: &str) -> RatFunc {
        // (n/d)' = (n'd - nd')/d^2
        let n = self.num.derivative(var).mul(&self.den).sub(&self.num.mul(&self.den.derivative(var)));
        RatFunc::new(n, self.den.mul(&self.den)).unwrap()
    }

    /// Substitutes another rational function for a variable.
    pub fn compose(&self, var: &str, value: &RatFunc) -> Result<RatFunc> {
        let subst = |p: &MultiPoly| -> RatFunc {
            let coeffs = p.univariate_in(var);
            let mut acc = RatFunc::zero();
            for c in coeffs.iter().rev() {
                acc = acc.mul(value).add(&RatFunc::from_poly(c.compress_vars()));
            }
            acc
        };
        subst(&self.num).div(&subst(&self.den))
    }

    pub fn eval_complex_eps(&self, point: &dyn Fn(&str) -> Complex64, eps: f64) -> Result<Complex64> {
        let d = self.den.eval_complex(point);
        if d.norm() <= eps {
            return Err(Error::PoleProximity(d.norm()));
        }
        Ok(self.num.eval_complex(point) / d)
    }

    pub fn eval_complex(&self, point: &dyn Fn(&str) -> Complex64) -> Result<Complex64> {
        self.eval_complex_eps(point, DEFAULT_POLE_EPS)
    }

    /// Single-variable convenience evaluation.
    pub fn eval1(&self, x: Complex64) -> Result<Complex64> {
        self.eval_complex(&move |_| x)
    }

    pub fn eval_rational(&self, point: &dyn Fn(&str) -> Rational) -> Result<Rational> {
        let d = self.den.eval_rational(point);
        if d.is_zero() {
            return Err(Error::PoleProximity(0.0));
        }
        Ok(self.num.eval_rational(point) / d)
    }

    /// Multiplicity of (var - e) in a polynomial.
    pub fn root_multiplicity(p: &MultiPoly, var: &str, e: &Rational) -> u32 {
        let lin = MultiPoly::var(var).sub(&MultiPoly::constant(&[], e.clone()));
        let mut m = 0;
        let mut cur = p.clone();
        while !cur.is_zero() {
            match cur.exact_div(&lin) {
                Ok(q) => {
                    cur = q;
                    m += 1;
                }
                Err(_) => break,
            }
        }
        m
    }

    /// Order of vanishing at var = e: positive for zeros, negative for poles.
    pub fn order_at(&self, var: &str, e: &Rational) -> i64 {
        if self.is_zero() {
            panic!("order of the zero function");
        }
        Self::root_multiplicity(&self.num, var, e) as i64
            - Self::root_multiplicity(&self.den, var, e) as i64
    }

    /// deg num - deg den in `var` (growth order at infinity).
    pub fn degree_growth(&self, var: &str) -> i64 {
        self.num.degree(var) as i64 - self.den.degree(var) as i64
    }

    // -- parsing ------------------------------------------------------------

    /// Parses the canonical textual grammar: `+ - * / ^` over rationals and
    /// variables, with parentheses; `/` is field division, so "3/8*z^4" is
    /// (3/8)z^4 and "z/w" is a genuine quotient.
    pub fn parse(input: &str) -> Result<RatFunc> {
        let tokens = tokenize(input)?;
        let mut p = Parser { tokens, pos: 0 };
        let f = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at token {}",
                p.pos
            )));
        }
        Ok(f)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one_display() {
            write!(f, "{}", self.num)
        } else {
            let n = if self.num.num_terms() > 1 {
                format!("({})", self.num)
            } else {
                format!("{}", self.num)
            };
            let d = if self.den.num_terms() > 1 {
                format!("({})", self.den)
            } else {
                format!("{}", self.den)
            };
            write!(f, "{n}/{d}")
        }
    }
}

impl MultiPoly {
    fn is_one_display(&self) -> bool {
        self.is_constant() && self.constant_value().map(|c| c.is_one()).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Var(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let s = s.replace('\u{2212}', "-"); // unicode minus
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                out.push(Tok::Int(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Var(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<RatFunc> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RatFunc> {
        let mut acc = self.unary()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Tok::Slash => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RatFunc> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RatFunc> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let neg = if let Some(Tok::Minus) = self.peek() {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.peek().cloned() {
                Some(Tok::Int(n)) => {
                    self.pos += 1;
                    let e: i32 = n
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad exponent `{n}`")))?;
                    base.pow(if neg { -e } else { e })
                }
                _ => Err(Error::Parse("expected integer exponent after ^".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<RatFunc> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(RatFunc::constant(parse_rational(&n)?))
            }
            Some(Tok::Var(v)) => {
                self.pos += 1;
                if v == "inf" {
                    return Err(Error::Parse("`inf` is not valid inside a polynomial".into()));
                }
                Ok(RatFunc::var(&v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(Error::Parse("missing closing parenthesis".into())),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_i64;
    use num::complex::Complex64;

    fn rf(s: &str) -> RatFunc {
        RatFunc::parse(s).unwrap()
    }

    #[test]
    fn parse_grammar() {
        assert_eq!(rf("3/8*z^4").num().degree("z"), 4);
        assert_eq!(rf("w^2 - z^3 - 1"), rf("-1 - z^3 + w^2"));
        assert_eq!(rf("1/x").den(), rf("x").num());
        assert_eq!(rf("z/w").to_string(), "z/w");
        assert_eq!(rf("x/2"), rf("1/2*x"));
        assert_eq!(rf("1/(x-1)").den(), rf("x-1").num());
        assert_eq!(rf("x^-2"), rf("1/x^2"));
    }

    #[test]
    fn reduction_and_normalization() {
        let f = rf("(x^2-1)/(2*x-2)");
        assert_eq!(f, rf("(x+1)/2"));
        // positive-leading denominator
        let g = rf("1/(-x+1)");
        assert_eq!(g.to_string(), "-1/(x - 1)");
    }

    #[test]
    fn eval_examples() {
        // (x^2-1)/(x-1) at 2 -> 3
        let f = rf("(x^2-1)/(x-1)");
        assert_eq!(f.eval1(Complex64::new(2.0, 0.0)).unwrap().re, 3.0);
        // 1/x at 0 -> pole
        assert!(matches!(
            rf("1/x").eval1(Complex64::new(0.0, 0.0)),
            Err(Error::PoleProximity(_))
        ));
        // (x^2-x+1)/(x^2*(x-1)^2) at 1/2 -> 12
        let f = rf("(x^2-x+1)/(x^2*(x-1)^2)");
        let v = f.eval1(Complex64::new(0.5, 0.0)).unwrap();
        assert!((v.re - 12.0).abs() < 1e-12 && v.im.abs() < 1e-14);
        assert_eq!(
            f.eval_rational(&|_| crate::rational::q_ratio(1, 2)).unwrap(),
            q_i64(12)
        );
    }

    #[test]
    fn compose_chain_rule() {
        // f(g) with f = x^2+1, g = 1/(x+1)
        let f = rf("x^2+1");
        let g = rf("1/(x+1)");
        let h = f.compose("x", &g).unwrap();
        assert_eq!(h, rf("(x^2 + 2*x + 2)/(x^2 + 2*x + 1)"));
    }

    #[test]
    fn display_round_trip() {
        for s in [
            "-3/8*z^4 + 3*z",
            "(x^2 - x + 1)/(x^2*(x-1)^2)",
            "z/w",
            "-1/2",
        ] {
            let f = rf(s);
            let f2 = RatFunc::parse(&f.to_string()).unwrap();
            assert_eq!(f, f2, "round trip failed for {s}");
        }
    }
}
