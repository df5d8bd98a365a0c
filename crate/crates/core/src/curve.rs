//! Algebraic-curve arithmetic: function-field elements a(z) + b(z)w modulo
//! w^2 = P(z), total derivatives, local expansions at places, and the
//! zero/pole bookkeeping behind the residue invariant.

use num::complex::Complex64;
use num::Zero;


use crate::error::{Error, Result};
use crate::poly::{gcd_poly, MultiPoly};
use crate::ratfunc::RatFunc;
use crate::rational::{rational_to_c64, Rational};
use crate::series::{Coeff, ComplexSeries, RationalSeries, Series};

/// Plane curve F(x, y) = 0 with a chosen dependent variable y.
/// Only the total-derivative rule is supported at this generality.
#[derive(Clone, Debug)]
pub struct PlaneCurve {
    f: MultiPoly,
    x: String,
    y: String,
}

impl PlaneCurve {
    pub fn new(f: MultiPoly, dependent: &str) -> Result<PlaneCurve> {
        let vars = f.compress_vars().vars().to_vec();
        if vars.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "plane curve needs exactly two variables, got {vars:?}"
            )));
        }
        if !vars.iter().any(|v| v == dependent) {
            return Err(Error::InvalidInput(format!(
                "dependent variable {dependent} does not occur in F"
            )));
        }
        let x = vars.iter().find(|v| *v != dependent).unwrap().clone();
        // heuristic irreducibility guard: square-free in the dependent variable
        let fy = f.derivative(dependent);
        if !fy.is_zero() {
            let g = gcd_poly(&f, &fy)?;
            if !g.is_constant() {
                return Err(Error::InvalidInput(
                    "curve polynomial is not square-free".into(),
                ));
            }
        }
        Ok(PlaneCurve {
            f,
            x,
            y: dependent.to_string(),
        })
    }

    pub fn polynomial(&self) -> &MultiPoly {
        &self.f
    }

    /// Total x-derivative along the curve: f' = f_x - (F_x / F_y) f_y.
    pub fn total_derivative(&self, f: &RatFunc) -> RatFunc {
        let fx = RatFunc::from_poly(self.f.derivative(&self.x));
        let fy = RatFunc::from_poly(self.f.derivative(&self.y));
        let dfx = f.derivative(&self.x);
        let dfy = f.derivative(&self.y);
        dfx.sub(&fx.div(&fy).expect("F_y nonzero").mul(&dfy))
    }
}

/// Odd-degree hyperelliptic model w^2 = P(z), deg P = 2g + 1.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperellipticCurve {
    p: MultiPoly,
    var: String,
    genus: u32,
}

impl HyperellipticCurve {
    pub fn new(p: MultiPoly) -> Result<HyperellipticCurve> {
        let p = p.compress_vars();
        let vars = p.vars().to_vec();
        if vars.len() != 1 {
            return Err(Error::InvalidInput(
                "hyperelliptic model must be univariate".into(),
            ));
        }
        let var = vars[0].clone();
        let deg = p.degree(&var);
        if deg < 3 || deg % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "deg P = {deg}: need an odd degree >= 3"
            )));
        }
        let g = gcd_poly(&p, &p.derivative(&var))?;
        if !g.is_constant() {
            return Err(Error::InvalidInput("P must be square-free".into()));
        }
        Ok(HyperellipticCurve {
            p,
            var,
            genus: (deg - 1) / 2,
        })
    }

    pub fn p(&self) -> &MultiPoly {
        &self.p
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    pub fn p_ratfunc(&self) -> RatFunc {
        RatFunc::from_poly(self.p.clone())
    }

    /// w' = P'(z) / (2w), stored as the odd part P'/(2P) * w.
    pub fn w_derivative(&self) -> CurveFunction {
        let dp = RatFunc::from_poly(self.p.derivative(&self.var));
        let half = dp
            .div(&RatFunc::from_poly(self.p.clone()))
            .unwrap()
            .scale(&Rational::new(1.into(), 2.into()));
        CurveFunction::from_parts(RatFunc::zero(), half)
    }
}

/// a(z) + b(z) w reduced modulo w^2 - P(z).
#[derive(Clone, Debug, PartialEq)]
pub struct CurveFunction {
    a: RatFunc,
    b: RatFunc,
}

impl CurveFunction {
    pub fn from_parts(a: RatFunc, b: RatFunc) -> CurveFunction {
        CurveFunction { a, b }
    }

    pub fn from_ratfunc(a: RatFunc) -> CurveFunction {
        CurveFunction {
            a,
            b: RatFunc::zero(),
        }
    }

    pub fn w() -> CurveFunction {
        CurveFunction {
            a: RatFunc::zero(),
            b: RatFunc::one(),
        }
    }

    pub fn zero() -> CurveFunction {
        Self::from_ratfunc(RatFunc::zero())
    }

    pub fn one() -> CurveFunction {
        Self::from_ratfunc(RatFunc::one())
    }

    /// Even/odd decomposition under the hyperelliptic involution w -> -w.
    pub fn parity_decompose(&self) -> (RatFunc, RatFunc) {
        (self.a.clone(), self.b.clone())
    }

    pub fn even(&self) -> &RatFunc {
        &self.a
    }

    pub fn odd(&self) -> &RatFunc {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &CurveFunction) -> CurveFunction {
        CurveFunction {
            a: self.a.add(&o.a),
            b: self.b.add(&o.b),
        }
    }

    pub fn sub(&self, o: &CurveFunction) -> CurveFunction {
        CurveFunction {
            a: self.a.sub(&o.a),
            b: self.b.sub(&o.b),
        }
    }

    pub fn neg(&self) -> CurveFunction {
        CurveFunction {
            a: self.a.neg(),
            b: self.b.neg(),
        }
    }

    pub fn scale(&self, c: &Rational) -> CurveFunction {
        CurveFunction {
            a: self.a.scale(c),
            b: self.b.scale(c),
        }
    }

    pub fn mul(&self, o: &CurveFunction, curve: &HyperellipticCurve) -> CurveFunction {
        let p = curve.p_ratfunc();
        CurveFunction {
            a: self.a.mul(&o.a).add(&self.b.mul(&o.b).mul(&p)),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.a)),
        }
    }

    /// Norm a^2 - b^2 P (the product with the conjugate sheet).
    pub fn norm(&self, curve: &HyperellipticCurve) -> RatFunc {
        let p = curve.p_ratfunc();
        self.a.mul(&self.a).sub(&self.b.mul(&self.b).mul(&p))
    }

    pub fn inv(&self, curve: &HyperellipticCurve) -> Result<CurveFunction> {
        if self.is_zero() {
            return Err(Error::InvalidInput("inverse of zero curve function".into()));
        }
        let n = self.norm(curve);
        if n.is_zero() {
            return Err(Error::InvalidInput(
                "zero norm: function vanishes on one sheet identically".into(),
            ));
        }
        Ok(CurveFunction {
            a: self.a.div(&n)?,
            b: self.b.neg().div(&n)?,
        })
    }

    pub fn div(&self, o: &CurveFunction, curve: &HyperellipticCurve) -> Result<CurveFunction> {
        Ok(self.mul(&o.inv(curve)?, curve))
    }

    /// Total derivative along the curve: (a + bw)' = a' + (b' + b P'/(2P)) w.
    pub fn total_derivative(&self, curve: &HyperellipticCurve) -> CurveFunction {
        let var = curve.var();
        let dp = RatFunc::from_poly(curve.p().derivative(var));
        let p = curve.p_ratfunc();
        let half_dlog = dp.div(&p).unwrap().scale(&Rational::new(1.into(), 2.into()));
        CurveFunction {
            a: self.a.derivative(var),
            b: self.b.derivative(var).add(&self.b.mul(&half_dlog)),
        }
    }

    pub fn eval(&self, curve: &HyperellipticCurve, z: Complex64, w: Complex64) -> Result<Complex64> {
        let _ = curve;
        let av = if self.a.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.a.eval1(z)?
        };
        let bv = if self.b.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.b.eval1(z)?
        };
        Ok(av + bv * w)
    }
}

/// Facade over a function field that is either univariate rational (genus
/// zero) or the quadratic extension of a hyperelliptic curve, so calculus
/// code can run on both without branching everywhere.
pub struct FunctionField<'a> {
    pub curve: Option<&'a HyperellipticCurve>,
    pub var: String,
}

impl<'a> FunctionField<'a> {
    pub fn genus0(var: &str) -> FunctionField<'static> {
        FunctionField {
            curve: None,
            var: var.to_string(),
        }
    }

    pub fn on(curve: &'a HyperellipticCurve) -> FunctionField<'a> {
        FunctionField {
            curve: Some(curve),
            var: curve.var().to_string(),
        }
    }

    pub fn mul(&self, a: &CurveFunction, b: &CurveFunction) -> CurveFunction {
        match self.curve {
            Some(c) => a.mul(b, c),
            None => CurveFunction::from_ratfunc(a.even().mul(b.even())),
        }
    }

    pub fn div(&self, a: &CurveFunction, b: &CurveFunction) -> Result<CurveFunction> {
        match self.curve {
            Some(c) => a.div(b, c),
            None => Ok(CurveFunction::from_ratfunc(a.even().div(b.even())?)),
        }
    }

    pub fn td(&self, a: &CurveFunction) -> CurveFunction {
        match self.curve {
            Some(c) => a.total_derivative(c),
            None => CurveFunction::from_ratfunc(a.even().derivative(&self.var)),
        }
    }
}

// ---------------------------------------------------------------------------
// places and local expansions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum PlaceLoc {
    Exact(Rational),
    Numeric(Complex64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Place {
    /// Non-branch finite point (z0, sheet); the sheet picks the sign of w.
    Regular { z: PlaceLoc, positive_sheet: bool },
    /// Finite branch point: P(z0) = 0 with local parameter t^2 = z - z0.
    Branch { z: PlaceLoc },
    /// The unique place over z = infinity (odd-degree model), t^-2 = z.
    Infinite,
}

/// A local expansion, exact when the data allows it and numeric otherwise.
#[derive(Clone, Debug)]
pub enum LocalSeries {
    Exact(RationalSeries),
    Numeric(ComplexSeries),
}

impl LocalSeries {
    pub fn leading_order(&self) -> Option<i64> {
        match self {
            LocalSeries::Exact(s) => s.leading_order(),
            LocalSeries::Numeric(s) => s.leading_order(),
        }
    }

    pub fn coeff_c64(&self, k: i64) -> Complex64 {
        match self {
            LocalSeries::Exact(s) => rational_to_c64(&s.coeff(k)),
            LocalSeries::Numeric(s) => s.coeff(k),
        }
    }
}

/// p(z0 + t) as a power series (exact synthetic shift).
fn poly_shift<C: Coeff>(p: &MultiPoly, var: &str, z0: &C, conv: &dyn Fn(&Rational) -> C, trunc: i64) -> Series<C> {
    let coeffs = p.univariate_in(var);
    let n = coeffs.len();
    let mut c: Vec<C> = coeffs
        .iter()
        .map(|q| conv(&q.constant_value().expect("univariate poly")))
        .collect();
    // repeated synthetic division by (z - z0): after k passes the running
    // remainders are the Taylor coefficients at z0
    let mut out = vec![C::zero(); n];
    for item in out.iter_mut().take(n) {
        for i in (0..c.len() - 1).rev() {
            let t = c[i + 1].mul(z0);
            c[i] = c[i].add(&t);
        }
        *item = c[0].clone();
        c.remove(0);
        if c.is_empty() {
            break;
        }
    }
    let mut s = Series::zero_window(0, trunc);
    for (k, v) in out.into_iter().enumerate() {
        if (k as i64) < trunc {
            s.set_coeff(k as i64, v);
        }
    }
    s
}

/// z -> t^e substitution on exponents (e.g. branch parameter t^2 = z - E).
fn series_stretch<C: Coeff>(s: &Series<C>, e: i64) -> Series<C> {
    let min = s.min_order() * e;
    let trunc = s.trunc() * e;
    let mut out = Series::zero_window(min.min(trunc), trunc.max(min));
    for k in s.min_order()..s.trunc() {
        let c = s.coeff(k);
        if !c.is_negligible() {
            out.set_coeff(k * e, c);
        }
    }
    out
}

/// p(t^-2) as a Laurent series.
fn poly_at_infinity<C: Coeff>(p: &MultiPoly, var: &str, conv: &dyn Fn(&Rational) -> C, trunc: i64) -> Series<C> {
    let coeffs = p.univariate_in(var);
    let deg = coeffs.len() as i64 - 1;
    let mut s = Series::zero_window(-2 * deg, trunc);
    for (k, q) in coeffs.iter().enumerate() {
        let v = q.constant_value().expect("univariate poly");
        let pos = -2 * (k as i64);
        if pos < trunc {
            s.set_coeff(pos, conv(&v));
        }
    }
    s
}

fn ratfunc_series<C: Coeff>(
    f: &RatFunc,
    var: &str,
    mode: &ExpandMode<C>,
    conv: &dyn Fn(&Rational) -> C,
    trunc: i64,
) -> Result<Series<C>> {
    let expand = |p: &MultiPoly| -> Series<C> {
        match mode {
            ExpandMode::At(z0) => poly_shift(p, var, z0, conv, trunc + 2),
            ExpandMode::Branch(z0) => {
                let s = poly_shift(p, var, z0, conv, trunc + 2);
                series_stretch(&s, 2).rewindow(0, trunc + 2)
            }
            ExpandMode::Infinity => poly_at_infinity(p, var, conv, trunc + 2),
        }
    };
    let n = expand(f.num());
    let d = expand(f.den());
    if d.is_zero_to_trunc() {
        return Err(Error::InvalidPlace(
            "denominator vanishes identically in the local window".into(),
        ));
    }
    n.div(&d)
}

enum ExpandMode<C> {
    At(C),
    Branch(C),
    Infinity,
}

struct PlaceData<C: Coeff> {
    /// local series of w when the function has an odd part
    w_series: Option<Series<C>>,
    /// dz/dt as a Laurent series
    dz_dt: Series<C>,
    mode: ExpandMode<C>,
}

fn place_data<C: Coeff>(
    curve: &HyperellipticCurve,
    place: &Place,
    z0: Option<C>,
    w_sign_positive: bool,
    need_w: bool,
    conv: &dyn Fn(&Rational) -> C,
    trunc: i64,
) -> Result<PlaceData<C>> {
    let var = curve.var();
    match place {
        Place::Regular { .. } => {
            let z0 = z0.expect("regular place has a location");
            let p_series = poly_shift(curve.p(), var, &z0, conv, trunc + 2);
            if p_series.coeff(0).is_negligible() {
                return Err(Error::InvalidPlace(
                    "P(z0) = 0: this is a branch place, not a regular one".into(),
                ));
            }
            let w = if need_w {
                let mut w = p_series.sqrt().map_err(|_| {
                    Error::InvalidPlace("P(z0) is not a square in the coefficient ring".into())
                })?;
                if !w_sign_positive {
                    w = w.neg();
                }
                Some(w)
            } else {
                None
            };
            let dz = Series::monomial(C::one(), 0, trunc + 2);
            Ok(PlaceData {
                w_series: w,
                dz_dt: dz,
                mode: ExpandMode::At(z0),
            })
        }
        Place::Branch { .. } => {
            let z0 = z0.expect("branch place has a location");
            // P(z) = (z - E) P1(z); w = t sqrt(P1(E + t^2))
            let p_shift = poly_shift(curve.p(), var, &z0, conv, trunc + 4);
            if !p_shift.coeff(0).is_negligible() {
                return Err(Error::InvalidPlace("P(z0) != 0 at a branch place".into()));
            }
            if p_shift.coeff(1).is_negligible() {
                return Err(Error::InvalidPlace(
                    "P has a repeated root here; the model must be square-free".into(),
                ));
            }
            // u(s) = P(z0+s)/s, then w = t * sqrt(u(t^2))
            let w = if need_w {
                let u = p_shift.trim(); // starts at order 1
                let u_shifted = Series::new(
                    0,
                    (1..(trunc + 4)).map(|k| u.coeff(k)).collect(),
                    trunc + 3,
                );
                let u_sq = series_stretch(&u_shifted, 2).rewindow(0, trunc + 3);
                let mut w = u_sq.sqrt()?;
                if !w_sign_positive {
                    w = w.neg();
                }
                Some(w.mul(&Series::monomial(C::one(), 1, trunc + 3)))
            } else {
                None
            };
            let dz = Series::monomial(C::from_i64(2), 1, trunc + 2);
            Ok(PlaceData {
                w_series: w,
                dz_dt: dz,
                mode: ExpandMode::Branch(z0),
            })
        }
        Place::Infinite => {
            // w^2 = P(t^-2) = t^{-2(2g+1)} * (lc + O(t^2))
            let d = 2 * curve.genus() as i64 + 1;
            let p_inf = poly_at_infinity(curve.p(), var, conv, trunc + 2);
            let shifted = Series::new(
                0,
                (0..(trunc + 2 + 2 * d)).map(|k| p_inf.coeff(k - 2 * d)).collect(),
                trunc + 2 + 2 * d,
            );
            let w = if need_w {
                let mut w = shifted.sqrt().map_err(|_| {
                    Error::InvalidPlace("leading coefficient of P is not a square".into())
                })?;
                if !w_sign_positive {
                    w = w.neg();
                }
                Some(w.mul(&Series::monomial(C::one(), -d, trunc + 2)))
            } else {
                None
            };
            let dz = Series::monomial(C::from_i64(-2), -3, trunc + 2);
            Ok(PlaceData {
                w_series: w,
                dz_dt: dz,
                mode: ExpandMode::Infinity,
            })
        }
    }
}

fn expand_generic<C: Coeff>(
    f: &CurveFunction,
    curve: &HyperellipticCurve,
    place: &Place,
    z0: Option<C>,
    k: i64,
    conv: &dyn Fn(&Rational) -> C,
    n_terms: i64,
) -> Result<Series<C>> {
    let var = curve.var();
    let degs = [
        f.a.num().degree(var),
        f.a.den().degree(var),
        f.b.num().degree(var),
        f.b.den().degree(var),
        curve.p().degree(var),
    ];
    let slack = 2 * (*degs.iter().max().unwrap() as i64) + 4 * k.abs() + 6;
    let trunc = n_terms + slack;
    let positive = match place {
        Place::Regular { positive_sheet, .. } => *positive_sheet,
        _ => true,
    };
    let data = place_data(curve, place, z0.clone(), positive, !f.b.is_zero(), conv, trunc)?;
    let mut acc = Series::zero_window(0, trunc);
    if !f.a.is_zero() {
        acc = acc.add(&ratfunc_series(&f.a, var, &data.mode, conv, trunc)?);
    }
    if !f.b.is_zero() {
        let bs = ratfunc_series(&f.b, var, &data.mode, conv, trunc)?;
        acc = acc.add(&bs.mul(data.w_series.as_ref().expect("w requested")));
    }
    let mut out = acc;
    if k != 0 {
        let mut dz_pow = Series::monomial(C::one(), 0, trunc);
        for _ in 0..k.abs() {
            dz_pow = dz_pow.mul(&data.dz_dt);
        }
        if k < 0 {
            dz_pow = dz_pow.inv()?;
        }
        out = out.mul(&dz_pow);
    }
    Ok(out)
}

/// Local expansion of the k-differential f (dz)^k in the place's parameter.
pub fn local_expansion(
    f: &CurveFunction,
    curve: &HyperellipticCurve,
    place: &Place,
    k: i64,
    n_terms: i64,
) -> Result<LocalSeries> {
    if n_terms < 1 {
        return Err(Error::InvalidInput("need at least one term".into()));
    }
    // decide exact vs numeric
    let exact_loc = match place {
        Place::Regular { z: PlaceLoc::Exact(q), .. } | Place::Branch { z: PlaceLoc::Exact(q) } => {
            Some(q.clone())
        }
        Place::Infinite => None,
        _ => None,
    };
    let numeric_loc = match place {
        Place::Regular { z: PlaceLoc::Numeric(c), .. }
        | Place::Branch { z: PlaceLoc::Numeric(c) } => Some(*c),
        _ => None,
    };
    let is_infinite = matches!(place, Place::Infinite);
    // validate the place against the curve
    if let Some(q) = &exact_loc {
        let pv = curve
            .p_ratfunc()
            .eval_rational(&|_| q.clone())
            .expect("polynomial evaluation");
        match place {
            Place::Branch { .. } if !pv.is_zero() => {
                return Err(Error::InvalidPlace(format!("P({q}) != 0 at a branch place")))
            }
            Place::Regular { .. } if pv.is_zero() => {
                return Err(Error::InvalidPlace(format!("P({q}) = 0: branch, not regular")))
            }
            _ => {}
        }
    }
    if is_infinite || exact_loc.is_some() {
        // try the exact route first
        let conv = |q: &Rational| q.clone();
        let attempt = expand_generic(
            f,
            curve,
            place,
            exact_loc.clone(),
            k,
            &conv,
            n_terms,
        );
        match attempt {
            Ok(s) => return Ok(LocalSeries::Exact(s)),
            // no rational square root available: fall through to numeric
            Err(Error::InvalidPlace(msg)) if msg.contains("square") => {}
            Err(Error::DegenerateMap(msg)) if msg.contains("square root") => {}
            Err(e) => return Err(e),
        }
    }
    let z0: Option<Complex64> = numeric_loc
        .or_else(|| exact_loc.as_ref().map(|q| rational_to_c64(q)));
    let conv = |q: &Rational| rational_to_c64(q);
    let s = expand_generic(f, curve, place, z0, k, &conv, n_terms)?;
    Ok(LocalSeries::Numeric(s))
}

/// Valuation of the k-differential f (dz)^k at the place.
pub fn order_at(
    f: &CurveFunction,
    curve: &HyperellipticCurve,
    place: &Place,
    k: i64,
) -> Result<i64> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let s = local_expansion(f, curve, place, k, 16)?;
    s.leading_order().ok_or_else(|| {
        Error::InvalidPlace("no leading term detected within the window".into())
    })
}

// ---------------------------------------------------------------------------
// residue invariant
// ---------------------------------------------------------------------------

/// Multiplicity classes of h against the square-free root set W:
/// returns (class polynomial, multiplicity >= 1) with disjoint classes.
fn mult_classes(h: &MultiPoly, w: &MultiPoly) -> Result<Vec<(MultiPoly, u32)>> {
    // levels[m-1] = product of (z-E) over roots E with multiplicity >= m
    let mut levels: Vec<MultiPoly> = Vec::new();
    let mut cur = h.clone();
    let mut a = gcd_poly(&cur, w)?;
    while !a.is_constant() {
        levels.push(a.clone());
        cur = cur.exact_div(&a)?;
        a = gcd_poly(&cur, &a)?;
    }
    let mut out = Vec::new();
    for m in 0..levels.len() {
        let exact = if m + 1 < levels.len() {
            levels[m].exact_div(&levels[m + 1])?
        } else {
            levels[m].clone()
        };
        if !exact.is_constant() {
            out.push((exact.normalize_primitive(), (m + 1) as u32));
        }
    }
    Ok(out)
}

/// Disjoint classes of signed orders of the rational function h at the roots
/// of W, including the zero-order remainder class.
fn order_classes(h: &RatFunc, w: &MultiPoly) -> Result<Vec<(MultiPoly, i64)>> {
    let mut classes: Vec<(MultiPoly, i64)> = Vec::new();
    let mut covered = MultiPoly::one_poly(&[]);
    for (poly, m) in mult_classes(h.num(), w)? {
        covered = covered.mul(&poly);
        classes.push((poly, m as i64));
    }
    for (poly, m) in mult_classes(h.den(), w)? {
        covered = covered.mul(&poly);
        classes.push((poly, -(m as i64)));
    }
    let rest = w.exact_div(&covered)?;
    if !rest.is_constant() {
        classes.push((rest.normalize_primitive(), 0));
    }
    Ok(classes)
}

/// Sum over all places of ord(f (dz)^k); always k(2g-2) for nonzero f, and a
/// `ConsistencyFailure` otherwise (that would be an enumeration bug).
pub fn residue_sum_of_dlog(
    f: &CurveFunction,
    curve: &HyperellipticCurve,
    k: i64,
) -> Result<i64> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let var = curve.var();
    let p = curve.p();
    let g = curve.genus() as i64;

    // branch places: ord_t f = min(2 ord_E a, 2 ord_E b + 1), plus k from dz
    let mut branch = 0i64;
    let a_classes = if f.a.is_zero() {
        None
    } else {
        Some(order_classes(&f.a, p)?)
    };
    let b_classes = if f.b.is_zero() {
        None
    } else {
        Some(order_classes(&f.b, p)?)
    };
    match (&a_classes, &b_classes) {
        (Some(ac), None) => {
            for (poly, m) in ac {
                branch += poly.degree(var) as i64 * (2 * m + k);
            }
        }
        (None, Some(bc)) => {
            for (poly, m) in bc {
                branch += poly.degree(var) as i64 * (2 * m + 1 + k);
            }
        }
        (Some(ac), Some(bc)) => {
            for (pa, ma) in ac {
                for (pb, mb) in bc {
                    let gcd = gcd_poly(pa, pb)?;
                    let d = gcd.degree(var) as i64;
                    if d > 0 {
                        branch += d * ((2 * ma).min(2 * mb + 1) + k);
                    }
                }
            }
        }
        (None, None) => unreachable!("f nonzero"),
    }

    // infinite place
    let d_a = if f.a.is_zero() {
        None
    } else {
        Some(-2 * f.a.degree_growth(var))
    };
    let d_b = if f.b.is_zero() {
        None
    } else {
        Some(-2 * f.b.degree_growth(var) - (2 * g + 1))
    };
    let inf_f = match (d_a, d_b) {
        (Some(x), Some(y)) => x.min(y),
        (Some(x), None) => x,
        (None, Some(y)) => y,
        (None, None) => unreachable!(),
    };
    let infinite = inf_f - 3 * k;

    // regular places via the norm: the order sum over all finite z0 is
    // deg num - deg den, from which the branch locations are subtracted
    let n = f.norm(curve);
    let mut regular = n.num().degree(var) as i64 - n.den().degree(var) as i64;
    for (poly, m) in order_classes(&n, p)? {
        regular -= poly.degree(var) as i64 * m;
    }

    let total = branch + infinite + regular;
    let expected = k * (2 * g - 2);
    if total != expected {
        return Err(Error::ConsistencyFailure {
            got: total,
            expected,
        });
    }
    Ok(total)
}
