//! Schwarzian-bracket calculus and constructors for Fuchsian potentials:
//! genus-zero orbifold data, the odd-degree accessory-polynomial template,
//! the two explicit one-parameter families in z and w, change of variable,
//! the companion equation for the derivative, and indicial exponents.

use num::complex::Complex64;
use num::{One, Zero};

use crate::curve::{CurveFunction, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use crate::ratfunc::RatFunc;
use crate::rational::{q_i64, q_ratio, rational_sqrt, Rational};

/// Fractional linear map (a t + b) / (c t + d).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<MobiusMap> {
        if (a * d - b * c).abs() < 1e-300 {
            return Err(Error::DegenerateMap("ad - bc = 0".into()));
        }
        Ok(MobiusMap { a, b, c, d })
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, t: Complex64) -> Complex64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrbifoldPoint {
    Finite(Rational),
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchOrder {
    Finite(u32),
    Infinity,
}

impl BranchOrder {
    /// The double-pole coefficient (p^-2 - 1)/2 of the potential.
    pub fn pole_coefficient(&self) -> Rational {
        match self {
            BranchOrder::Finite(p) => {
                let p2 = q_i64(*p as i64 * *p as i64);
                (p2.recip() - q_i64(1)) / q_i64(2)
            }
            BranchOrder::Infinity => q_ratio(-1, 2),
        }
    }
}

/// Genus-zero orbifold data: singular points, branch orders, and the
/// simple-pole residues of the potential (the accessory tail).
#[derive(Clone, Debug)]
pub struct OrbifoldSpec {
    pub points: Vec<OrbifoldPoint>,
    pub orders: Vec<BranchOrder>,
    /// Simple-pole residues at the finite points, in input order.  May be
    /// empty for the three-point case, where the tail is forced.
    pub accessory: Vec<Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Orbifold,
    AccessoryTemplate,
    WhittakerZ,
    WhittakerW,
    Custom,
}

/// The potential of the second-order equation in potential form, together
/// with the metadata needed downstream (variable, optional curve, recorded
/// singular structure).
#[derive(Clone, Debug)]
pub struct FuchsianQ {
    q: CurveFunction,
    var: String,
    curve: Option<HyperellipticCurve>,
    provenance: Provenance,
    /// Recorded (finite point, branch order) pairs plus the order at
    /// infinity when it is singular.
    pub finite_singular: Vec<(Rational, BranchOrder)>,
    pub infinity_order: Option<BranchOrder>,
}

impl FuchsianQ {
    pub fn from_ratfunc(q: RatFunc, var: &str) -> FuchsianQ {
        FuchsianQ {
            q: CurveFunction::from_ratfunc(q),
            var: var.to_string(),
            curve: None,
            provenance: Provenance::Custom,
            finite_singular: Vec::new(),
            infinity_order: None,
        }
    }

    pub fn on_curve(q: CurveFunction, curve: HyperellipticCurve) -> FuchsianQ {
        let var = curve.var().to_string();
        FuchsianQ {
            q,
            var,
            curve: Some(curve),
            provenance: Provenance::Custom,
            finite_singular: Vec::new(),
            infinity_order: None,
        }
    }

    pub fn q(&self) -> &CurveFunction {
        &self.q
    }

    /// The even part as a plain rational function (univariate potentials).
    pub fn rational(&self) -> Result<&RatFunc> {
        if !self.q.odd().is_zero() {
            return Err(Error::InvalidInput(
                "potential has an odd part; it lives on the curve".into(),
            ));
        }
        Ok(self.q.even())
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn curve(&self) -> Option<&HyperellipticCurve> {
        self.curve.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    /// Total derivative of the potential in its own variable.
    pub fn derivative(&self) -> CurveFunction {
        match &self.curve {
            Some(c) => self.q.total_derivative(c),
            None => CurveFunction::from_ratfunc(self.q.even().derivative(&self.var)),
        }
    }
}

// ---------------------------------------------------------------------------
// Schwarzian brackets of rational maps
// ---------------------------------------------------------------------------

/// Invariant bracket [R, x] = {R, x} / R'^2 = (R''' R' - (3/2) R''^2) / R'^4.
pub fn schwarzian_rational(r: &RatFunc, var: &str) -> Result<RatFunc> {
    let d1 = r.derivative(var);
    if d1.is_zero() {
        return Err(Error::DegenerateMap("constant map".into()));
    }
    let d2 = d1.derivative(var);
    let d3 = d2.derivative(var);
    let num = d3.mul(&d1).sub(&d2.mul(&d2).scale(&q_ratio(3, 2)));
    num.div(&d1.pow(4)?)
}

/// Same bracket along a curve, with total derivatives.
pub fn schwarzian_on_curve(
    r: &CurveFunction,
    curve: &HyperellipticCurve,
) -> Result<CurveFunction> {
    let d1 = r.total_derivative(curve);
    if d1.is_zero() {
        return Err(Error::DegenerateMap("constant map".into()));
    }
    let d2 = d1.total_derivative(curve);
    let d3 = d2.total_derivative(curve);
    let num = d3
        .mul(&d1, curve)
        .sub(&d2.mul(&d2, curve).scale(&q_ratio(3, 2)));
    num.div(&d1.mul(&d1, curve).mul(&d1.mul(&d1, curve), curve), curve)
}

/// Potential for the scalar R(x) when [x, tau] = Q(x):
/// [R, x] + Q / R'^2, expressed in the source variable.
pub fn change_variable_q(q: &FuchsianQ, r: &RatFunc) -> Result<FuchsianQ> {
    let var = q.var().to_string();
    let bracket = schwarzian_rational(r, &var)?;
    let d1 = r.derivative(&var);
    let qq = q.rational()?;
    let new_q = bracket.add(&qq.div(&d1.mul(&d1))?);
    Ok(FuchsianQ::from_ratfunc(new_q, &var))
}

/// Attempts to rewrite T(x) as a rational function of z = R(x).
/// Returns the rewritten function in `new_var` when T lies in the subfield
/// generated by R (verified by back-substitution).
pub fn express_in_new_variable(
    t: &RatFunc,
    r: &RatFunc,
    var: &str,
    new_var: &str,
) -> Option<RatFunc> {
    let deg_r = r.num().degree(var).max(r.den().degree(var)) as i64;
    if deg_r == 0 {
        return None;
    }
    let deg_t = t.num().degree(var).max(t.den().degree(var)) as i64;
    let d = (deg_t / deg_r + 1) as u32;
    // unknowns p_0..p_d, q_0..q_d with
    //   sum p_i rn^i rd^(d-i) * td = sum q_i rn^i rd^(d-i) * tn
    let rn = r.num().clone();
    let rd = r.den().clone();
    let mut basis: Vec<MultiPoly> = Vec::new();
    for i in 0..=d {
        basis.push(rn.pow(i).mul(&rd.pow(d - i)));
    }
    let mut cols: Vec<MultiPoly> = Vec::new();
    for b in &basis {
        cols.push(b.mul(t.den()));
    }
    for b in &basis {
        cols.push(b.mul(t.num()).neg());
    }
    let max_deg = cols.iter().map(|c| c.degree(var)).max().unwrap_or(0) as usize;
    let ncols = cols.len();
    let mut matrix = vec![vec![Rational::zero(); ncols]; max_deg + 1];
    for (j, c) in cols.iter().enumerate() {
        for (k, coeff) in c.univariate_in(var).iter().enumerate() {
            if let Some(v) = coeff.constant_value() {
                matrix[k][j] = v;
            }
        }
    }
    let sol = nullspace_vector(matrix)?;
    let nv = MultiPoly::var(new_var);
    let mut pnum = MultiPoly::zero(&[new_var]);
    let mut pden = MultiPoly::zero(&[new_var]);
    for i in 0..=d as usize {
        pnum = pnum.add(&nv.pow(i as u32).scale(&sol[i]));
        pden = pden.add(&nv.pow(i as u32).scale(&sol[i + d as usize + 1]));
    }
    if pden.is_zero() {
        return None;
    }
    let s = RatFunc::new(pnum, pden).ok()?;
    // verify S(R(x)) = T(x)
    let r_renamed = RatFunc::new(
        r.num().rename_var(var, new_var).rename_var(new_var, new_var),
        r.den().clone(),
    );
    let _ = r_renamed;
    let check = s.compose(new_var, r).ok()?;
    if check == *t {
        Some(s)
    } else {
        None
    }
}

/// One nonzero kernel vector of the homogeneous system, if any.
fn nullspace_vector(mut m: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    if m.is_empty() {
        return None;
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = m[rank][col].clone().recip();
        for v in m[rank].iter_mut() {
            *v *= &inv;
        }
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for cc in 0..cols {
                    let t = &m[rank][cc] * &factor;
                    m[r][cc] -= t;
                }
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
        if rank == rows {
            break;
        }
    }
    let free = (0..cols).find(|&c| pivot_of_col[c] == usize::MAX)?;
    let mut sol = vec![Rational::zero(); cols];
    sol[free] = Rational::one();
    for c in 0..cols {
        let r = pivot_of_col[c];
        if r != usize::MAX {
            sol[c] = -m[r][free].clone();
        }
    }
    Some(sol)
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// Genus-zero orbifold potential with double poles (p^-2 - 1)/2 at each
/// singular point and a validated (or, for three points, solved) tail of
/// simple-pole residues.
pub fn build_orbifold_q(spec: &OrbifoldSpec) -> Result<FuchsianQ> {
    if spec.points.len() != spec.orders.len() {
        return Err(Error::InvalidAccessoryData(
            "points and orders must have matching lengths".into(),
        ));
    }
    if spec.points.len() < 3 {
        return Err(Error::InvalidAccessoryData(
            "an orbifold needs at least three singular points".into(),
        ));
    }
    let mut infinity_order: Option<BranchOrder> = None;
    let mut finite: Vec<(Rational, BranchOrder)> = Vec::new();
    for (pt, ord) in spec.points.iter().zip(&spec.orders) {
        match pt {
            OrbifoldPoint::Infinity => {
                if infinity_order.is_some() {
                    return Err(Error::InvalidAccessoryData("duplicate point at infinity".into()));
                }
                infinity_order = Some(*ord);
            }
            OrbifoldPoint::Finite(e) => finite.push((e.clone(), *ord)),
        }
    }
    for i in 0..finite.len() {
        for j in i + 1..finite.len() {
            if finite[i].0 == finite[j].0 {
                return Err(Error::InvalidAccessoryData("singular points must be distinct".into()));
            }
        }
    }
    let c: Vec<Rational> = finite.iter().map(|(_, o)| o.pole_coefficient()).collect();
    let c_inf = infinity_order.map(|o| o.pole_coefficient());

    let betas: Vec<Rational> = if spec.accessory.is_empty() && spec.points.len() == 3 {
        solve_three_point_tail(&finite, &c, &c_inf)?
    } else {
        if spec.accessory.len() != finite.len() {
            return Err(Error::InvalidAccessoryData(format!(
                "expected {} residues, got {}",
                finite.len(),
                spec.accessory.len()
            )));
        }
        spec.accessory.clone()
    };

    // decay constraints at infinity
    let sum_beta: Rational = betas.iter().fold(Rational::zero(), |a, b| a + b);
    if !sum_beta.is_zero() {
        return Err(Error::InvalidAccessoryData(
            "residues must sum to zero for the required decay".into(),
        ));
    }
    let x2: Rational = c
        .iter()
        .zip(&finite)
        .zip(&betas)
        .fold(Rational::zero(), |acc, ((cs, (e, _)), b)| acc + cs + b * e);
    match &c_inf {
        Some(ci) => {
            if &x2 != ci {
                return Err(Error::InvalidAccessoryData(format!(
                    "second-order decay mismatch: got {x2}, need {ci}"
                )));
            }
        }
        None => {
            if !x2.is_zero() {
                return Err(Error::InvalidAccessoryData(
                    "potential must vanish to second order at the regular infinite point".into(),
                ));
            }
            let x3: Rational = c
                .iter()
                .zip(&finite)
                .zip(&betas)
                .fold(Rational::zero(), |acc, ((cs, (e, _)), b)| {
                    acc + cs * e * q_i64(2) + b * e * e
                });
            if !x3.is_zero() {
                return Err(Error::InvalidAccessoryData(
                    "potential must vanish to third order at the regular infinite point".into(),
                ));
            }
        }
    }

    let var = "x";
    let x = RatFunc::var(var);
    let mut q = RatFunc::zero();
    for (((e, _), cs), b) in finite.iter().zip(&c).zip(&betas) {
        let lin = x.sub(&RatFunc::constant(e.clone()));
        q = q.add(&RatFunc::constant(cs.clone()).div(&lin.mul(&lin))?);
        q = q.add(&RatFunc::constant(b.clone()).div(&lin)?);
    }
    let mut out = FuchsianQ::from_ratfunc(q, var);
    out.provenance = Provenance::Orbifold;
    out.finite_singular = finite;
    out.infinity_order = infinity_order;
    Ok(out)
}

fn solve_three_point_tail(
    finite: &[(Rational, BranchOrder)],
    c: &[Rational],
    c_inf: &Option<Rational>,
) -> Result<Vec<Rational>> {
    match (finite.len(), c_inf) {
        (2, Some(ci)) => {
            // beta1 + beta2 = 0, c1 + c2 + beta1 e1 + beta2 e2 = c_inf
            let e1 = &finite[0].0;
            let e2 = &finite[1].0;
            let rhs = ci - &c[0] - &c[1];
            let denom = e1 - e2;
            let b1 = rhs / denom;
            Ok(vec![b1.clone(), -b1])
        }
        (3, None) => {
            // three equations in three unknowns
            let e: Vec<&Rational> = finite.iter().map(|(e, _)| e).collect();
            let mut m = vec![vec![Rational::zero(); 4]; 3];
            for j in 0..3 {
                m[0][j] = Rational::one();
                m[1][j] = e[j].clone();
                m[2][j] = e[j] * e[j];
            }
            m[0][3] = Rational::zero();
            m[1][3] = -(c.iter().fold(Rational::zero(), |a, b| a + b));
            m[2][3] = -(c
                .iter()
                .zip(&e)
                .fold(Rational::zero(), |a, (cs, ej)| a + cs * *ej * q_i64(2)));
            solve_linear_3(m)
        }
        _ => Err(Error::InvalidAccessoryData(
            "the tail is only forced for exactly three singular points".into(),
        )),
    }
}

fn solve_linear_3(mut m: Vec<Vec<Rational>>) -> Result<Vec<Rational>> {
    let n = 3;
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::InvalidAccessoryData("singular linear system".into()))?;
        m.swap(col, p);
        let inv = m[col][col].clone().recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for cc in 0..=n {
                    let t = &m[col][cc] * &f;
                    m[r][cc] -= t;
                }
            }
        }
    }
    Ok((0..n).map(|r| m[r][n].clone()).collect())
}

/// Potential of the odd-degree branch template, from the branch polynomial:
/// -(3/8) [ P'^2 - P'' P - (2n z^{2n-1} + A) P ] / P^2, deg P = 2n + 1.
pub fn build_q38_from_poly(p: &MultiPoly, a: &MultiPoly) -> Result<FuchsianQ> {
    let curve = HyperellipticCurve::new(p.clone())?;
    let var = curve.var().to_string();
    let n = curve.genus();
    if a.degree(&var) > 2 * n.saturating_sub(1) || (n == 0 && !a.is_zero()) {
        return Err(Error::InvalidAccessoryData(format!(
            "accessory polynomial degree {} exceeds {}",
            a.degree(&var),
            2 * n - 2
        )));
    }
    if !a.compress_vars().vars().iter().all(|v| v == &var) {
        return Err(Error::InvalidAccessoryData(
            "accessory polynomial must be univariate in the curve variable".into(),
        ));
    }
    let dp = p.derivative(&var);
    let ddp = dp.derivative(&var);
    let z = MultiPoly::var(&var);
    let mid = z
        .pow(2 * n - 1)
        .scale(&q_i64(2 * n as i64))
        .add(a);
    let bracket = dp.mul(&dp).sub(&ddp.mul(p)).sub(&mid.mul(p));
    let q = RatFunc::new(bracket.scale(&q_ratio(-3, 8)), p.mul(p))?;
    let mut out = FuchsianQ::from_ratfunc(q, &var);
    out.provenance = Provenance::AccessoryTemplate;
    out.infinity_order = Some(BranchOrder::Finite(2));
    out.curve = Some(curve);
    Ok(out)
}

/// Same template from an explicit list of 2n+1 distinct rational branch points.
pub fn build_q38(points: &[Rational], a: &MultiPoly) -> Result<FuchsianQ> {
    if points.len() < 3 || points.len() % 2 == 0 {
        return Err(Error::InvalidAccessoryData(
            "need an odd number (>= 3) of finite branch points".into(),
        ));
    }
    let var = "z";
    let mut p = MultiPoly::one_poly(&[var]);
    for e in points {
        p = p.mul(&MultiPoly::var(var).sub(&MultiPoly::constant(&[], e.clone())));
    }
    let mut out = build_q38_from_poly(&p, a)?;
    out.finite_singular = points
        .iter()
        .map(|e| (e.clone(), BranchOrder::Finite(2)))
        .collect();
    Ok(out)
}

/// The explicit z-side family: [z, tau] for w^2 = z^{2g+1} + 1,
/// -(3/8) (z^{2g+1} - 4g(g+1)) z^{2g-1} / (z^{2g+1} + 1)^2.
pub fn whittaker_z(g: u32) -> Result<FuchsianQ> {
    if g < 1 {
        return Err(Error::InvalidInput("genus must be at least 1".into()));
    }
    let var = "z";
    let z = MultiPoly::var(var);
    let gg = g as i64;
    let num = z
        .pow(2 * g + 1)
        .sub(&MultiPoly::constant(&[], q_i64(4 * gg * (gg + 1))))
        .mul(&z.pow(2 * g - 1))
        .scale(&q_ratio(-3, 8));
    let den = z.pow(2 * g + 1).add(&MultiPoly::one_poly(&[var])).pow(2);
    let q = RatFunc::new(num, den)?;
    let curve = HyperellipticCurve::new(
        z.pow(2 * g + 1).add(&MultiPoly::one_poly(&[var])),
    )?;
    let mut out = FuchsianQ::from_ratfunc(q, var);
    out.provenance = Provenance::WhittakerZ;
    out.curve = Some(curve);
    out.infinity_order = Some(BranchOrder::Finite(2));
    Ok(out)
}

/// The companion w-side family: -(2g(g+1)/(2g+1)^2) (w^2 + 3)/(w^2 - 1)^2.
pub fn whittaker_w(g: u32) -> Result<FuchsianQ> {
    if g < 1 {
        return Err(Error::InvalidInput("genus must be at least 1".into()));
    }
    let var = "w";
    let w = MultiPoly::var(var);
    let gg = g as i64;
    let coeff = q_ratio(-2 * gg * (gg + 1), (2 * gg + 1) * (2 * gg + 1));
    let num = w
        .pow(2)
        .add(&MultiPoly::constant(&[], q_i64(3)))
        .scale(&coeff);
    let den = w.pow(2).sub(&MultiPoly::one_poly(&[var])).pow(2);
    let q = RatFunc::new(num, den)?;
    let mut out = FuchsianQ::from_ratfunc(q, var);
    out.provenance = Provenance::WhittakerW;
    out.finite_singular = vec![
        (q_i64(1), BranchOrder::Finite(3)),
        (q_i64(-1), BranchOrder::Finite(3)),
    ];
    Ok(out)
}

/// Coefficients (c1, c0) of the companion equation for the derivative of a
/// solution: Phi'' + c1 Phi' + c0 Phi = 0 with c1 = -Q'/Q, c0 = -Q/2.
pub fn companion_phi(q: &FuchsianQ) -> Result<(CurveFunction, CurveFunction)> {
    if q.is_zero() {
        return Err(Error::DegeneratePotential);
    }
    let dq = q.derivative();
    let c1 = match q.curve() {
        Some(c) => dq.div(q.q(), c)?.neg(),
        None => CurveFunction::from_ratfunc(dq.even().div(q.q().even())?.neg()),
    };
    let c0 = q.q().scale(&q_ratio(-1, 2));
    Ok((c1, c0))
}

/// Where the indicial exponents are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularPoint {
    Finite(Rational),
    Infinity,
}

#[derive(Clone, Debug)]
pub struct IndicialData {
    /// Double-pole coefficient c of the potential at the point.
    pub coefficient: Rational,
    /// (exponent difference)^2 = 1 + 2c, always rational.
    pub difference_squared: Rational,
    /// Exact exponents when 1 + 2c is a rational square.
    pub exponents: Option<(Rational, Rational)>,
    /// Exact difference when available.
    pub difference: Option<Rational>,
}

/// Exponents of the potential equation at a regular singular point:
/// roots of r(r-1) = c/2 where c is the double-pole coefficient.
pub fn indicial_exponents(q: &FuchsianQ, point: &SingularPoint) -> Result<IndicialData> {
    let var = q.var().to_string();
    let qr = q.rational()?.clone();
    let c = match point {
        SingularPoint::Finite(e) => {
            let ord = -qr.order_at(&var, e);
            if ord > 2 {
                return Err(Error::IrregularSingularity {
                    point: format!("{e}"),
                    order: ord as usize,
                });
            }
            if ord < 2 {
                Rational::zero()
            } else {
                let lin = RatFunc::var(&var).sub(&RatFunc::constant(e.clone()));
                let shifted = qr.mul(&lin.mul(&lin));
                shifted.eval_rational(&|_| e.clone()).map_err(|_| {
                    Error::InvalidInput("unexpected pole while extracting the coefficient".into())
                })?
            }
        }
        SingularPoint::Infinity => {
            let growth = qr.degree_growth(&var);
            if !qr.is_zero() && growth > -2 {
                return Err(Error::IrregularSingularity {
                    point: "infinity".into(),
                    order: (growth + 4).max(3) as usize,
                });
            }
            if qr.is_zero() || growth < -2 {
                Rational::zero()
            } else {
                // leading coefficient of x^2 Q at infinity
                let num_lead = qr.num().univariate_in(&var).last().unwrap().constant_value().unwrap();
                let den_lead = qr.den().univariate_in(&var).last().unwrap().constant_value().unwrap();
                num_lead / den_lead
            }
        }
    };
    let diff2 = Rational::one() + &c + &c;
    let (exponents, difference) = match rational_sqrt(&diff2) {
        Some(d) => {
            let half = q_ratio(1, 2);
            let rp = (&d + Rational::one()) * &half;
            let rm = (Rational::one() - &d) * &half;
            (Some((rp, rm)), Some(d))
        }
        None => (None, None),
    };
    Ok(IndicialData {
        coefficient: c,
        difference_squared: diff2,
        exponents,
        difference,
    })
}

/// Solves the scalar equation [z, t] = Q(z) as an exact power series at a
/// regular point z0, with the normalization z(0) = z0, z'(0) = 1, z''(0) = 0
/// (the Moebius freedom of the general solution).  The inverse of the
/// ratio-of-solutions map has exactly these jets up to that freedom, so the
/// series parametrizes the curve near z0.
pub fn hauptmodul_series(
    q: &FuchsianQ,
    z0: Rational,
    trunc: i64,
) -> Result<crate::series::RationalSeries> {
    use crate::series::{RationalSeries, Series};
    let var = q.var().to_string();
    let qr = q.rational()?.clone();
    if qr
        .den()
        .eval_rational(&|_| z0.clone())
        .is_zero()
    {
        return Err(Error::InvalidInput(format!(
            "z0 = {z0} is a pole of the potential"
        )));
    }
    let _ = var;
    let mut z: RationalSeries = Series::zero_window(0, trunc);
    z.set_coeff(0, z0.clone());
    if trunc > 1 {
        z.set_coeff(1, Rational::one());
    }
    // z''' = (3/2) z''^2 / z' + z'^3 Q(z), solved coefficient by coefficient
    for j in 3..trunc {
        let d1 = z.derivative();
        let d2 = d1.derivative();
        let d3_known = d2.derivative();
        let _ = d3_known;
        let poly_eval = |p: &MultiPoly| -> RationalSeries {
            let coeffs = p.univariate_in(q.var());
            let mut acc: RationalSeries = Series::zero_window(0, trunc);
            for c in coeffs.iter().rev() {
                acc = acc.mul(&z).rewindow(0, trunc);
                let v = c.constant_value().expect("univariate");
                acc.set_coeff(0, acc.coeff(0) + v);
            }
            acc
        };
        let qn = poly_eval(qr.num());
        let qd = poly_eval(qr.den());
        let q_of_z = qn.div(&qd)?;
        let rhs = d2
            .mul(&d2)
            .div(&d1)?
            .scale(&q_ratio(3, 2))
            .add(&d1.mul(&d1).mul(&d1).mul(&q_of_z));
        let k = j - 3;
        let target = rhs.coeff(k);
        // coefficient of t^k in z''' is j(j-1)(j-2) a_j
        let factor = q_i64(j * (j - 1) * (j - 2));
        z.set_coeff(j, target / factor);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;

    fn rf(s: &str) -> RatFunc {
        RatFunc::parse(s).unwrap()
    }

    #[test]
    fn bracket_of_squares_and_cubes() {
        // [x^2, x] = -(3/8) x^-4
        assert_eq!(
            schwarzian_rational(&rf("x^2"), "x").unwrap(),
            rf("-3/(8*x^4)")
        );
        // Moebius maps have vanishing bracket
        assert!(schwarzian_rational(&rf("(2*x+1)/(x+1)"), "x")
            .unwrap()
            .is_zero());
        // independent oracle for R = x^3: {R,x} = -4/x^2, /R'^2 = 9x^4
        assert_eq!(
            schwarzian_rational(&rf("x^3"), "x").unwrap(),
            rf("-4/(9*x^6)")
        );
        assert!(matches!(
            schwarzian_rational(&rf("5"), "x"),
            Err(Error::DegenerateMap(_))
        ));
    }

    #[test]
    fn orbifold_lambda_potential() {
        let spec = OrbifoldSpec {
            points: vec![
                OrbifoldPoint::Finite(q_i64(0)),
                OrbifoldPoint::Finite(q_i64(1)),
                OrbifoldPoint::Infinity,
            ],
            orders: vec![
                BranchOrder::Infinity,
                BranchOrder::Infinity,
                BranchOrder::Infinity,
            ],
            accessory: vec![],
        };
        let q = build_orbifold_q(&spec).unwrap();
        assert_eq!(
            q.rational().unwrap(),
            &rf("-(x^2 - x + 1)/(2*x^2*(x-1)^2)")
        );
        // p = 2 at a single finite point gives the -3/8 coefficient
        assert_eq!(BranchOrder::Finite(2).pole_coefficient(), q_ratio(-3, 8));
        assert_eq!(BranchOrder::Infinity.pole_coefficient(), q_ratio(-1, 2));
    }

    #[test]
    fn orbifold_accessory_validation() {
        // supplied residues that break the decay are rejected
        let spec = OrbifoldSpec {
            points: vec![
                OrbifoldPoint::Finite(q_i64(0)),
                OrbifoldPoint::Finite(q_i64(1)),
                OrbifoldPoint::Infinity,
            ],
            orders: vec![
                BranchOrder::Infinity,
                BranchOrder::Infinity,
                BranchOrder::Infinity,
            ],
            accessory: vec![q_i64(1), q_i64(1)],
        };
        assert!(matches!(
            build_orbifold_q(&spec),
            Err(Error::InvalidAccessoryData(_))
        ));
        // and the forced values pass validation when supplied explicitly
        let spec_ok = OrbifoldSpec {
            accessory: vec![q_ratio(-1, 2), q_ratio(1, 2)],
            ..spec
        };
        assert!(build_orbifold_q(&spec_ok).is_ok());
    }

    #[test]
    fn whittaker_formulas() {
        assert_eq!(
            whittaker_z(1).unwrap().rational().unwrap(),
            &rf("-3/8*z*(z^3-8)/(z^3+1)^2")
        );
        assert_eq!(
            whittaker_z(2).unwrap().rational().unwrap(),
            &rf("-3/8*z^3*(z^5-24)/(z^5+1)^2")
        );
        assert_eq!(
            whittaker_w(1).unwrap().rational().unwrap(),
            &rf("-4/9*(w^2+3)/(w^2-1)^2")
        );
        assert_eq!(
            whittaker_w(2).unwrap().rational().unwrap(),
            &rf("-12/25*(w^2+3)/(w^2-1)^2")
        );
    }

    #[test]
    fn whittaker_z_flat_coordinate_oracle() {
        // with D = w * d/dz (the derivation along the flat coordinate for
        // g = 1), the bracket of z must reproduce the printed formula
        for g in [1u32] {
            let q = whittaker_z(g).unwrap();
            let curve = q.curve().unwrap().clone();
            let z = CurveFunction::from_ratfunc(rf("z"));
            let d = |f: &CurveFunction| {
                CurveFunction::w().mul(&f.total_derivative(&curve), &curve)
            };
            let z1 = d(&z);
            let z2 = d(&z1);
            let z3 = d(&z2);
            let z1p2 = z1.mul(&z1, &curve);
            let z1p3 = z1p2.mul(&z1, &curve);
            let z1p4 = z1p2.mul(&z1p2, &curve);
            let bracket = z3
                .div(&z1p3, &curve)
                .unwrap()
                .sub(&z2.mul(&z2, &curve).div(&z1p4, &curve).unwrap().scale(&q_ratio(3, 2)));
            assert!(bracket.odd().is_zero());
            assert_eq!(bracket.even(), q.rational().unwrap());
        }
    }

    #[test]
    fn q38_matches_whittaker_files() {
        for g in [1u32, 2] {
            let var = "z";
            let p = MultiPoly::var(var)
                .pow(2 * g + 1)
                .add(&MultiPoly::one_poly(&[var]));
            let q38 = build_q38_from_poly(&p, &MultiPoly::zero(&[var])).unwrap();
            let wz = whittaker_z(g).unwrap();
            assert_eq!(q38.rational().unwrap(), wz.rational().unwrap());
        }
    }

    #[test]
    fn q38_structure() {
        // three rational branch points, constant accessory polynomial
        let pts = [q_i64(0), q_i64(1), q_i64(-2)];
        let a = MultiPoly::constant(&["z"], q_i64(7));
        let q = build_q38(&pts, &a).unwrap();
        let qr = q.rational().unwrap();
        // double poles with coefficient exactly -3/8 at each branch point
        for e in &pts {
            assert_eq!(qr.order_at("z", e), -2);
            let lin = RatFunc::var("z").sub(&RatFunc::constant(e.clone()));
            let c = qr.mul(&lin.mul(&lin)).eval_rational(&|_| e.clone()).unwrap();
            assert_eq!(c, q_ratio(-3, 8));
        }
        // infinity budget: Q + 3/(8 z^2) = O(z^-3)
        let corr = qr.add(&rf("3/(8*z^2)"));
        assert!(corr.degree_growth("z") <= -3);
        // degree cap on the accessory polynomial
        let too_big = MultiPoly::var("z");
        assert!(matches!(
            build_q38(&pts, &too_big),
            Err(Error::InvalidAccessoryData(_))
        ));
    }

    #[test]
    fn change_variable_square() {
        let q0 = FuchsianQ::from_ratfunc(RatFunc::zero(), "x");
        let out = change_variable_q(&q0, &rf("x^2")).unwrap();
        assert_eq!(out.rational().unwrap(), &rf("-3/(8*x^4)"));
        // rewrite in z = x^2: -(3/8) z^-2
        let s = express_in_new_variable(out.rational().unwrap(), &rf("x^2"), "x", "z").unwrap();
        assert_eq!(s, rf("-3/(8*z^2)"));
        // Moebius R leaves only the scaled term
        let q = FuchsianQ::from_ratfunc(rf("x"), "x");
        let out = change_variable_q(&q, &rf("x+5")).unwrap();
        assert_eq!(out.rational().unwrap(), &rf("x"));
    }

    #[test]
    fn change_variable_composition_rule() {
        // [R2 o R1, x] + Q/(R2 o R1)'^2 = [R2,z](R1(x)) + ([R1,x] + Q/R1'^2)/R2'(R1(x))^2
        let qs = [rf("0"), rf("x"), rf("1/(x-3)")];
        let r1s = [rf("x^2+1"), rf("(x-1)/(x+2)"), rf("x^3-x")];
        let r2s = [rf("z^2"), rf("(2*z+1)/(z-4)"), rf("z^2+z")];
        for q0 in &qs {
            for r1 in &r1s {
                for r2 in &r2s {
                    let q = FuchsianQ::from_ratfunc(q0.clone(), "x");
                    let r2x = r2.clone();
                    let composite = r2x.compose("z", r1).unwrap();
                    let direct = change_variable_q(&q, &composite).unwrap();
                    let step1 = change_variable_q(&q, r1).unwrap();
                    let bracket2 = schwarzian_rational(r2, "z").unwrap();
                    let bracket2_sub = bracket2.compose("z", r1).unwrap();
                    let d2 = r2.derivative("z").compose("z", r1).unwrap();
                    let two_step = bracket2_sub.add(
                        &step1
                            .rational()
                            .unwrap()
                            .div(&d2.mul(&d2))
                            .unwrap(),
                    );
                    assert_eq!(direct.rational().unwrap(), &two_step);
                }
            }
        }
    }

    #[test]
    fn companion_equation() {
        // Q = x: Phi'' - (1/x) Phi' - (x/2) Phi = 0
        let q = FuchsianQ::from_ratfunc(rf("x"), "x");
        let (c1, c0) = companion_phi(&q).unwrap();
        assert_eq!(c1.even(), &rf("-1/x"));
        assert_eq!(c0.even(), &rf("-x/2"));
        // constant potential drops the first-derivative term
        let q = FuchsianQ::from_ratfunc(rf("2"), "x");
        let (c1, c0) = companion_phi(&q).unwrap();
        assert!(c1.is_zero());
        assert_eq!(c0.even(), &rf("-1"));
        assert!(matches!(
            companion_phi(&FuchsianQ::from_ratfunc(RatFunc::zero(), "x")),
            Err(Error::DegeneratePotential)
        ));
    }

    #[test]
    fn companion_pole_structure_whittaker_w() {
        let q = whittaker_w(1).unwrap();
        let (c1, _) = companion_phi(&q).unwrap();
        // simple poles of -Q'/Q at w = 1, -1, and the roots of num(Q')
        let c1r = c1.even();
        for e in [q_i64(1), q_i64(-1)] {
            assert_eq!(c1r.order_at("w", &e), -1);
        }
        // Q'/Q numerator roots: derivative of (w^2+3)/(w^2-1)^2 has numerator
        // -2w(w^2+9)(...)  -- verify den(c1) carries exactly the poles
        let dq = q.derivative();
        let ratio = dq.even().div(q.rational().unwrap()).unwrap();
        assert_eq!(c1r, &ratio.neg());
    }

    #[test]
    fn indicial_cases() {
        // c = -3/8: exponents (3/4, 1/4), difference 1/2
        let q = build_q38(&[q_i64(0), q_i64(1), q_i64(-1)], &MultiPoly::zero(&["z"]))
            .unwrap();
        let d = indicial_exponents(&q, &SingularPoint::Finite(q_i64(0))).unwrap();
        assert_eq!(d.coefficient, q_ratio(-3, 8));
        assert_eq!(d.difference.unwrap(), q_ratio(1, 2));
        let (rp, rm) = d.exponents.unwrap();
        assert_eq!((rp, rm), (q_ratio(3, 4), q_ratio(1, 4)));
        // puncture: double exponent 1/2
        let spec = OrbifoldSpec {
            points: vec![
                OrbifoldPoint::Finite(q_i64(0)),
                OrbifoldPoint::Finite(q_i64(1)),
                OrbifoldPoint::Infinity,
            ],
            orders: vec![
                BranchOrder::Infinity,
                BranchOrder::Infinity,
                BranchOrder::Infinity,
            ],
            accessory: vec![],
        };
        let q = build_orbifold_q(&spec).unwrap();
        let d = indicial_exponents(&q, &SingularPoint::Finite(q_i64(0))).unwrap();
        assert_eq!(d.difference.unwrap(), q_i64(0));
        assert_eq!(d.exponents.unwrap().0, q_ratio(1, 2));
        // c = -4/9: difference 1/3 (elliptic of order 3)
        let q = whittaker_w(1).unwrap();
        let d = indicial_exponents(&q, &SingularPoint::Finite(q_i64(1))).unwrap();
        assert_eq!(d.coefficient, q_ratio(-4, 9));
        assert_eq!(d.difference.unwrap(), q_ratio(1, 3));
        // infinity of the lambda potential: c = -1/2 again
        let d = indicial_exponents(&q, &SingularPoint::Infinity).unwrap();
        let _ = d;
        // irregular pole detection
        let bad = FuchsianQ::from_ratfunc(rf("1/x^3"), "x");
        assert!(matches!(
            indicial_exponents(&bad, &SingularPoint::Finite(q_i64(0))),
            Err(Error::IrregularSingularity { .. })
        ));
    }

    #[test]
    fn hauptmodul_series_satisfies_equation() {
        // solve [z,t] = Q for the g=1 explicit family and push the series
        // back through the bracket
        let q = whittaker_z(1).unwrap();
        let z = hauptmodul_series(&q, q_i64(0), 12).unwrap();
        let bracket = crate::series::schwarzian_bracket(&z).unwrap();
        // compare with Q(z(t)) as series
        let qr = q.rational().unwrap();
        let horner = |p: &MultiPoly| {
            let coeffs = p.univariate_in("z");
            let mut acc = crate::series::RationalSeries::zero_window(0, 12);
            for c in coeffs.iter().rev() {
                acc = acc.mul(&z).rewindow(0, 12);
                acc.set_coeff(0, acc.coeff(0) + c.constant_value().unwrap());
            }
            acc
        };
        let rhs = horner(qr.num()).div(&horner(qr.den())).unwrap();
        let window = bracket.trunc().min(rhs.trunc());
        assert!(window >= 6);
        for k in 0..window {
            assert_eq!(bracket.coeff(k), rhs.coeff(k), "k={k}");
        }
    }

    #[test]
    fn orbifold_indicial_matches_order() {
        // difference = 1/p for every recorded point of a mixed orbifold
        let spec = OrbifoldSpec {
            points: vec![
                OrbifoldPoint::Finite(q_i64(0)),
                OrbifoldPoint::Finite(q_i64(1)),
                OrbifoldPoint::Infinity,
            ],
            orders: vec![
                BranchOrder::Finite(2),
                BranchOrder::Finite(3),
                BranchOrder::Finite(7),
            ],
            accessory: vec![],
        };
        let q = build_orbifold_q(&spec).unwrap();
        for (e, ord) in q.finite_singular.clone() {
            let d = indicial_exponents(&q, &SingularPoint::Finite(e)).unwrap();
            let BranchOrder::Finite(p) = ord else { panic!() };
            assert_eq!(d.difference.unwrap(), q_ratio(1, p as i64));
        }
        let d = indicial_exponents(&q, &SingularPoint::Infinity).unwrap();
        assert_eq!(d.difference.unwrap(), q_ratio(1, 7));
    }
}
