//! Jet-variable machinery: the curvature triple in formal jets, clearing the
//! rational identities into polynomial relations over the curve, resultant
//! elimination of the curve variables into one autonomous polynomial, and
//! the matching pipeline for 1-differentials.

use std::collections::BTreeMap;

use num::complex::Complex64;
use num::{One, Signed, Zero};

use crate::curve::{CurveFunction, FunctionField, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::poly::{gcd_poly, resultant_uni, squarefree_part, Mono, MultiPoly};
use crate::ratfunc::RatFunc;
use crate::rational::{log2_estimate, q_ratio, rational_gcd, to_f64_shifted, Rational};

/// Connection jets: g0..g3 stand for the connection and three derivatives.
pub const GAMMA_JETS: [&str; 4] = ["g0", "g1", "g2", "g3"];
/// Differential jets: p0..p3 for a weight-2 object and three derivatives.
pub const PSI_JETS: [&str; 4] = ["p0", "p1", "p2", "p3"];

/// Scaling weights of the jets (order of derivative + 1).
pub const JET_WEIGHTS: [u32; 4] = [1, 2, 3, 4];

fn jet(vars: &[&str; 4], k: usize) -> MultiPoly {
    MultiPoly::var(vars[k])
}

/// Formal d/dtau on a jet polynomial: j_k -> j_{k+1}.  The top jet must be
/// absent (there is no j_4).
pub fn formal_tau_derivative(p: &MultiPoly, vars: &[&str; 4]) -> MultiPoly {
    assert_eq!(p.degree(vars[3]), 0, "cannot differentiate past the top jet");
    let mut out = MultiPoly::zero(&[]);
    for k in 0..3 {
        let d = p.derivative(vars[k]);
        if !d.is_zero() {
            out = out.add(&d.mul(&jet(vars, k + 1)));
        }
    }
    out
}

/// The curvature K = g1 - g0^2/2 and its two covariant derivatives
/// (d/dtau - k Gamma) in closed form.
pub fn jet_curvature() -> (MultiPoly, MultiPoly, MultiPoly) {
    let vars = &GAMMA_JETS;
    let g0 = jet(vars, 0);
    let g1 = jet(vars, 1);
    let g2 = jet(vars, 2);
    let g3 = jet(vars, 3);
    let k = g1.sub(&g0.pow(2).scale(&q_ratio(1, 2)));
    let grad_k = g2
        .sub(&g0.mul(&g1).scale(&Rational::from_integer(3.into())))
        .add(&g0.pow(3));
    let grad2_k = g3
        .sub(&g0.mul(&g2).scale(&Rational::from_integer(6.into())))
        .sub(&g1.pow(2).scale(&Rational::from_integer(3.into())))
        .add(&g0.pow(2).mul(&g1).scale(&Rational::from_integer(12.into())))
        .sub(&g0.pow(4).scale(&Rational::from_integer(3.into())));
    (k, grad_k, grad2_k)
}

// ---------------------------------------------------------------------------
// clearing the identities into polynomial relations
// ---------------------------------------------------------------------------

/// Internal coordinates the elimination runs in.  The curvature pipeline
/// works in (k0, k1, k2) = (K, grad K, grad^2 K): together with g0 these are
/// a triangular polynomial change of coordinates on the jet space, and the
/// relations never involve g0, so the resultants stay thousands of times
/// smaller than in expanded jets.  The differential pipeline uses its jets
/// directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetSpace {
    Curvature,
    Differential,
}

/// Compact curvature coordinates.
pub const CURV_VARS: [&str; 3] = ["k0", "k1", "k2"];

impl JetSpace {
    /// Variable eliminated last in the square-free step (the top jet).
    pub fn top_var(&self) -> &'static str {
        match self {
            JetSpace::Curvature => "k2",
            JetSpace::Differential => "p3",
        }
    }

    pub fn weight_of(&self, var: &str) -> u32 {
        match self {
            JetSpace::Curvature => match var {
                "k0" => 2,
                "k1" => 3,
                "k2" => 4,
                _ => 0,
            },
            JetSpace::Differential => PSI_JETS
                .iter()
                .position(|v| *v == var)
                .map(|k| JET_WEIGHTS[k])
                .unwrap_or(0),
        }
    }

    pub fn final_jet_vars(&self) -> [&'static str; 4] {
        match self {
            JetSpace::Curvature => GAMMA_JETS,
            JetSpace::Differential => PSI_JETS,
        }
    }
}

/// The cleared relations: P1 and P2 are polynomials in the curve variables
/// and the jet coordinates of the space, Pc is the curve when present.
#[derive(Clone, Debug)]
pub struct Relations {
    pub p1: MultiPoly,
    pub p2: MultiPoly,
    pub curve: Option<HyperellipticCurve>,
    /// Variable eliminated by the final resultant.
    pub z_var: String,
    /// Sheet variable, always "w" when a curve is present.
    pub w_var: Option<String>,
    pub space: JetSpace,
    pub log: Vec<String>,
}

/// Reduces w-powers modulo w^2 = P(z).
fn reduce_w(p: &MultiPoly, w_var: &str, curve_p: &MultiPoly) -> MultiPoly {
    let mut out = MultiPoly::zero(&[]);
    let coeffs = p.univariate_in(w_var);
    let w = MultiPoly::var(w_var);
    for (e, c) in coeffs.iter().enumerate() {
        let q = (e / 2) as u32;
        let r = (e % 2) as u32;
        let mut t = c.mul(&curve_p.pow(q));
        if r == 1 {
            t = t.mul(&w);
        }
        out = out.add(&t);
    }
    out
}

/// Writes a curve function as (A + B w) / D with polynomial A, B, D.
fn clear_curve_function(f: &CurveFunction) -> (MultiPoly, MultiPoly, MultiPoly) {
    let (a, b) = f.parity_decompose();
    let d = a.den().mul(b.den());
    let an = a.num().mul(b.den());
    let bn = b.num().mul(a.den());
    // strip the common factor of the cleared triple
    let mut g = gcd_poly(&an, &bn).unwrap_or_else(|_| MultiPoly::one_poly(&[]));
    if an.is_zero() && bn.is_zero() {
        g = MultiPoly::one_poly(&[]);
    }
    let g = match gcd_poly(&g, &d) {
        Ok(g) => g,
        Err(_) => MultiPoly::one_poly(&[]),
    };
    if g.is_constant() {
        (an, bn, d)
    } else {
        (
            an.exact_div(&g).unwrap(),
            bn.exact_div(&g).unwrap(),
            d.exact_div(&g).unwrap(),
        )
    }
}

/// Clears (grad K)^2/K^3 = S, grad^2 K/K^2 = T into polynomial relations.
pub fn build_relations(
    s: &CurveFunction,
    t: &CurveFunction,
    curve: Option<&HyperellipticCurve>,
    z_var: &str,
) -> Result<Relations> {
    if s.is_zero() || t.is_zero() {
        return Err(Error::DegenerateIdentity);
    }
    let mut log = Vec::new();
    let w_var = curve.map(|_| "w".to_string());
    if let Some(c) = curve {
        assert_ne!(c.var(), "w", "curve variable collides with the sheet name");
    }
    // compact curvature coordinates
    let k = MultiPoly::var(CURV_VARS[0]);
    let grad_k = MultiPoly::var(CURV_VARS[1]);
    let grad2_k = MultiPoly::var(CURV_VARS[2]);

    let embed = |f: &CurveFunction| -> (MultiPoly, MultiPoly, MultiPoly) {
        clear_curve_function(f)
    };
    let w = MultiPoly::var("w");

    let (sa, sb, sd) = embed(s);
    let mut p1 = sd
        .mul(&grad_k.pow(2))
        .sub(&sa.add(&sb.mul(&w)).mul(&k.pow(3)));
    let (ta, tb, td) = embed(t);
    let mut p2 = td.mul(&grad2_k).sub(&ta.add(&tb.mul(&w)).mul(&k.pow(2)));

    if let Some(c) = curve {
        p1 = reduce_w(&p1, "w", c.p());
        p2 = reduce_w(&p2, "w", c.p());
    }
    p1 = p1.normalize_primitive();
    p2 = p2.normalize_primitive();
    log.push(format!(
        "relations cleared: deg_{z_var}(P1) = {}, deg_{z_var}(P2) = {}",
        p1.degree(z_var),
        p2.degree(z_var)
    ));
    Ok(Relations {
        p1,
        p2,
        curve: curve.cloned(),
        z_var: z_var.to_string(),
        w_var,
        space: JetSpace::Curvature,
        log,
    })
}

// ---------------------------------------------------------------------------
// elimination
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ElimOptions {
    /// Cap on the curve-variable degree of any polynomial entering a
    /// resultant step (the guard against runaway elimination).
    pub degree_cap: usize,
    /// Above this combined degree the chain divides out discovered content
    /// factors instead of carrying exact subresultant corrections; every
    /// removed factor is logged.
    pub exact_threshold: usize,
}

impl Default for ElimOptions {
    fn default() -> Self {
        ElimOptions {
            degree_cap: 64,
            exact_threshold: 14,
        }
    }
}

/// The derived autonomous ODE: a square-free, content-free polynomial in the
/// four jet variables.  For the curvature pipeline the compact form in
/// (K, grad K, grad^2 K) is kept alongside; it is the numerically preferred
/// evaluation route.
#[derive(Clone, Debug)]
pub struct DerivedOde {
    pub xi: MultiPoly,
    pub compact: Option<MultiPoly>,
    pub jet_vars: [&'static str; 4],
    pub elimination_log: Vec<String>,
}

/// Resultant in w against w^2 - P: the norm alpha^2 - beta^2 P of a w-linear
/// polynomial (degenerate shapes are passed through and logged).
fn eliminate_w(
    p: &MultiPoly,
    curve: &HyperellipticCurve,
    log: &mut Vec<String>,
    which: &str,
) -> MultiPoly {
    let coeffs = p.univariate_in("w");
    assert!(coeffs.len() <= 2, "input not reduced modulo the curve");
    let alpha = coeffs[0].clone();
    let beta = coeffs.get(1).cloned().unwrap_or_else(|| MultiPoly::zero(&[]));
    if beta.is_zero() {
        log.push(format!("{which}: no sheet variable; skipping the norm"));
        return alpha;
    }
    if alpha.is_zero() {
        log.push(format!("{which}: pure odd part; using its coefficient"));
        return beta;
    }
    alpha.pow(2).sub(&beta.pow(2).mul(curve.p()))
}

/// Divides `poly` by every power of `factor` that divides it; returns the
/// count removed.
fn strip_factor(poly: &mut MultiPoly, factor: &MultiPoly) -> usize {
    if factor.is_constant() {
        return 0;
    }
    let mut n = 0;
    while let Ok(q) = poly.exact_div(factor) {
        *poly = q;
        n += 1;
    }
    n
}

fn strip_rational_content(coeffs: &mut [MultiPoly]) -> Rational {
    let mut rc = Rational::zero();
    for t in coeffs.iter() {
        rc = rational_gcd(&rc, &t.content());
        if rc.is_one() {
            break;
        }
    }
    if !(rc.is_zero() || rc.is_one()) {
        for t in coeffs.iter_mut() {
            *t = t.map_coeffs(|x| x / &rc);
        }
    }
    rc
}

/// Relaxed subresultant chain: pseudo-remainders divided by the subresultant
/// correction (when it divides exactly) and by rational content, run until
/// the degree-zero element.  The result is the resultant up to the removed
/// factors, all of which are logged.
fn relaxed_chain_resultant(
    a0: Vec<MultiPoly>,
    b0: Vec<MultiPoly>,
    z_var: &str,
    cap: usize,
    log: &mut Vec<String>,
) -> Result<MultiPoly> {
    let mut a = a0;
    let mut b = b0;
    let strip_lead = |v: &mut Vec<MultiPoly>| {
        while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
            v.pop();
        }
    };
    strip_lead(&mut a);
    strip_lead(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    let mut g = MultiPoly::one_poly(&[]);
    let mut h = MultiPoly::one_poly(&[]);
    loop {
        let m = a.len() - 1;
        let n = b.len() - 1;
        if m > cap || n > cap {
            return Err(Error::DegreeOverflow { got: m.max(n), cap });
        }
        if n == 0 {
            return Ok(b[0].clone());
        }
        let d = m - n;
        // pseudo-remainder lc(b)^{d+1} a mod b
        let c = b[n].clone();
        let mut r: Vec<MultiPoly> = a.clone();
        let mut e = (d + 1) as i64;
        loop {
            strip_lead(&mut r);
            if r.iter().all(|t| t.is_zero()) || r.len() - 1 < n {
                break;
            }
            let dr = r.len() - 1;
            let lr = r[dr].clone();
            let kk = dr - n;
            let mut nr = Vec::with_capacity(dr);
            for i in 0..dr {
                let mut t = c.mul(&r[i]);
                if i >= kk {
                    t = t.sub(&lr.mul(&b[i - kk]));
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
        strip_lead(&mut r);
        if r.iter().all(|t| t.is_zero()) {
            return Ok(MultiPoly::zero(&[]));
        }
        // subresultant divisor, applied when it divides every coefficient
        let divisor = g.mul(&h.pow(d as u32));
        if !divisor.is_constant() {
            let divided: Option<Vec<MultiPoly>> = r
                .iter()
                .map(|t| t.exact_div(&divisor).ok())
                .collect();
            if let Some(v) = divided {
                r = v;
            } else {
                log.push(format!(
                    "step deg {m}->{}: subresultant divisor skipped",
                    r.len() - 1
                ));
            }
        }
        let rc = strip_rational_content(&mut r);
        if !(rc.is_zero() || rc.is_one()) {
            log.push(format!("removed rational content {rc}"));
        }
        g = b[n].clone();
        h = if d == 0 {
            h
        } else {
            let num = g.pow(d as u32);
            match num.exact_div(&h.pow(d as u32 - 1)) {
                Ok(v) => v,
                Err(_) => num,
            }
        };
        a = b;
        b = r;
    }
}

fn degree_pair(p: &MultiPoly, z_var: &str) -> usize {
    p.degree(z_var) as usize
}

/// Eliminates the curve variables from the two relations, post-processes the
/// raw resultant (content, shared leading-coefficient factors, square-free
/// part in the top jet), and records everything removed.
pub fn eliminate(rel: &Relations, opts: &ElimOptions) -> Result<DerivedOde> {
    let mut log = rel.log.clone();
    let z = rel.z_var.clone();
    let space = rel.space;
    let top = space.top_var();
    let cap = opts.degree_cap;

    let mut a = rel.p1.clone();
    let mut b = rel.p2.clone();
    if let Some(c) = &rel.curve {
        a = eliminate_w(&a, c, &mut log, "P1");
        b = eliminate_w(&b, c, &mut log, "P2");
        log.push(format!(
            "after sheet elimination: deg_{z}(A) = {}, deg_{z}(B) = {}",
            a.degree(&z),
            b.degree(&z)
        ));
    }
    a = a.normalize_primitive();
    b = b.normalize_primitive();
    if degree_pair(&a, &z) > cap || degree_pair(&b, &z) > cap {
        return Err(Error::DegreeOverflow {
            got: degree_pair(&a, &z).max(degree_pair(&b, &z)),
            cap,
        });
    }

    // jet-content of the inputs (a factor of every coefficient is extraneous);
    // only meaningful when the curve variable is still present
    for (name, p) in [("A", &mut a), ("B", &mut b)] {
        if p.degree(&z) == 0 {
            continue;
        }
        let coeffs = p.univariate_in(&z);
        let mut content = coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .min_by_key(|c| c.num_terms())
            .cloned()
            .unwrap_or_else(|| MultiPoly::one_poly(&[]));
        for c in coeffs.iter().filter(|c| !c.is_zero()) {
            if content.is_constant() {
                break;
            }
            content = gcd_poly(&content, c)?;
        }
        if !content.is_constant() {
            *p = p.exact_div(&content)?;
            log.push(format!("{name}: removed input content {content}"));
        }
    }

    let da = a.degree(&z);
    let db = b.degree(&z);
    let mut xi_raw = if da == 0 && db == 0 {
        log.push("both relations autonomous; keeping the first".into());
        a.clone()
    } else if da == 0 {
        log.push("P1 already autonomous".into());
        a.clone()
    } else if db == 0 {
        log.push("P2 already autonomous".into());
        b.clone()
    } else {
        let lca = a.univariate_in(&z).last().unwrap().clone();
        let lcb = b.univariate_in(&z).last().unwrap().clone();
        let lead_shared = gcd_poly(&lca, &lcb)?;
        let run = |a: &MultiPoly, b: &MultiPoly, log: &mut Vec<String>| -> Result<MultiPoly> {
            let ua = a.univariate_in(&z);
            let ub = b.univariate_in(&z);
            if (da + db) as usize <= opts.exact_threshold {
                log.push("exact subresultant resultant".into());
                Ok(resultant_uni(&ua, &ub))
            } else {
                log.push("relaxed chain (large degrees); removed factors logged".into());
                relaxed_chain_resultant(ua, ub, &z, cap, log)
            }
        };
        let mut res = run(&a, &b, &mut log)?;
        if res.is_zero() {
            // common factor: strip it, log it, retry once
            let g = gcd_poly(&a, &b)?;
            log.push(format!("resultant vanished; common factor {g}"));
            if g.is_constant() {
                return Err(Error::EliminationDegeneracy("1".into()));
            }
            let a2 = a.exact_div(&g)?;
            let b2 = b.exact_div(&g)?;
            res = run(&a2, &b2, &mut log)?;
            if res.is_zero() {
                return Err(Error::EliminationDegeneracy(g.to_string()));
            }
        }
        // factors independent of the top jet dividing both leading coefficients
        if !lead_shared.is_constant() && lead_shared.degree(top) == 0 {
            let n = strip_factor(&mut res, &lead_shared);
            if n > 0 {
                log.push(format!(
                    "removed shared leading-coefficient factor ({lead_shared})^{n}"
                ));
            }
        }
        res
    };

    if xi_raw.is_zero() {
        return Err(Error::EliminationDegeneracy("zero result".into()));
    }
    xi_raw = xi_raw.normalize_primitive();

    // square-free part, preferring the top jet
    let order: Vec<&'static str> = match space {
        JetSpace::Curvature => vec!["k2", "k1", "k0"],
        JetSpace::Differential => vec!["p3", "p2", "p1", "p0"],
    };
    let sf_var = order
        .iter()
        .find(|v| xi_raw.degree(v) > 0)
        .copied()
        .unwrap_or(top);
    let before = xi_raw.total_degree();
    let xi_space = squarefree_part(&xi_raw, sf_var)?
        .normalize_primitive()
        .compress_vars();
    if xi_space.total_degree() != before {
        log.push(format!(
            "square-free reduction in {sf_var}: total degree {before} -> {}",
            xi_space.total_degree()
        ));
    }
    let weights: Vec<u32> = xi_space
        .vars()
        .iter()
        .map(|v| space.weight_of(v))
        .collect();
    log.push(format!(
        "eliminated form: {} terms, weighted degree {}",
        xi_space.num_terms(),
        xi_space.weighted_degree(&weights)
    ));

    let (xi, compact) = match space {
        JetSpace::Curvature => {
            let expanded = expand_curvature(&xi_space);
            log.push(format!(
                "expanded jets: {} terms, total degree {}",
                expanded.num_terms(),
                expanded.total_degree()
            ));
            (expanded, Some(xi_space))
        }
        JetSpace::Differential => (xi_space, None),
    };
    Ok(DerivedOde {
        xi,
        compact,
        jet_vars: space.final_jet_vars(),
        elimination_log: log,
    })
}

/// Substitutes the closed forms of (K, grad K, grad^2 K) into a compact
/// polynomial, with memoized powers.
pub fn expand_curvature(compact: &MultiPoly) -> MultiPoly {
    let (k, grad_k, grad2_k) = jet_curvature();
    let bases = [k, grad_k, grad2_k];
    let mut pows: [Vec<MultiPoly>; 3] = [
        vec![MultiPoly::one_poly(&[])],
        vec![MultiPoly::one_poly(&[])],
        vec![MultiPoly::one_poly(&[])],
    ];
    let var_idx: Vec<Option<usize>> = compact
        .vars()
        .iter()
        .map(|v| CURV_VARS.iter().position(|c| c == v))
        .collect();
    let mut out = MultiPoly::zero(&[]);
    for (mono, c) in compact.terms() {
        let mut exps = [0u32; 3];
        for (i, e) in mono.0.iter().enumerate() {
            if let Some(k) = var_idx[i] {
                exps[k] = *e;
            }
        }
        let mut term = MultiPoly::constant(&[], c.clone());
        for (k, e) in exps.iter().enumerate() {
            while pows[k].len() <= *e as usize {
                let next = pows[k].last().unwrap().mul(&bases[k]);
                pows[k].push(next);
            }
            term = term.mul(&pows[k][*e as usize]);
        }
        out = out.add(&term);
    }
    out.normalize_primitive()
}

/// Convenience wrapper: relations then elimination.
pub fn derive_ode(
    s: &CurveFunction,
    t: &CurveFunction,
    curve: Option<&HyperellipticCurve>,
    z_var: &str,
    opts: &ElimOptions,
) -> Result<DerivedOde> {
    let rel = build_relations(s, t, curve, z_var)?;
    eliminate(&rel, opts)
}

// ---------------------------------------------------------------------------
// the differential (psi) pipeline
// ---------------------------------------------------------------------------

/// Polynomial in the four differential jets with curve-function coefficients.
#[derive(Clone, Debug)]
struct PsiPoly {
    terms: BTreeMap<Vec<u32>, CurveFunction>,
}

impl PsiPoly {
    fn zero() -> PsiPoly {
        PsiPoly {
            terms: BTreeMap::new(),
        }
    }

    fn jet(k: usize) -> PsiPoly {
        let mut e = vec![0u32; 4];
        e[k] = 1;
        PsiPoly {
            terms: BTreeMap::from([(e, CurveFunction::one())]),
        }
    }

    fn scalar(f: CurveFunction) -> PsiPoly {
        if f.is_zero() {
            return Self::zero();
        }
        PsiPoly {
            terms: BTreeMap::from([(vec![0; 4], f)]),
        }
    }

    fn add(&self, o: &PsiPoly) -> PsiPoly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            let entry = out
                .terms
                .entry(e.clone())
                .or_insert_with(CurveFunction::zero);
            *entry = entry.add(c);
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    fn sub(&self, o: &PsiPoly) -> PsiPoly {
        self.add(&o.neg())
    }

    fn neg(&self) -> PsiPoly {
        PsiPoly {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    fn mul(&self, o: &PsiPoly, field: &FunctionField) -> PsiPoly {
        let mut out = PsiPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let c = field.mul(ca, cb);
                let entry = out.terms.entry(e).or_insert_with(CurveFunction::zero);
                *entry = entry.add(&c);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    fn pow(&self, n: u32, field: &FunctionField) -> PsiPoly {
        let mut acc = PsiPoly::scalar(CurveFunction::one());
        for _ in 0..n {
            acc = acc.mul(self, field);
        }
        acc
    }

    /// d/dtau with p_k -> p_{k+1} and coefficient rule df/dtau = f' xdot,
    /// xdot expressed through the substitution (xdot = R p0).
    fn tau_derivative(&self, field: &FunctionField, xdot: &PsiPoly) -> PsiPoly {
        let mut out = PsiPoly::zero();
        for (e, c) in &self.terms {
            // coefficient part
            let dc = field.td(c);
            if !dc.is_zero() {
                out = out.add(&PsiPoly {
                    terms: BTreeMap::from([(e.clone(), dc)]),
                }
                .mul(xdot, field));
            }
            // jet part
            for k in 0..3 {
                if e[k] > 0 {
                    let mut e2 = e.clone();
                    e2[k] -= 1;
                    e2[k + 1] += 1;
                    let factor = Rational::from_integer((e[k] as i64).into());
                    let entry = PsiPoly {
                        terms: BTreeMap::from([(e2, c.scale(&factor))]),
                    };
                    out = out.add(&entry);
                }
            }
            assert_eq!(e[3], 0, "top jet differentiated");
        }
        out
    }

    /// Clears all coefficient denominators into one polynomial in
    /// (z [, w], p0..p3); the common denominator cancels in the relation.
    fn clear(&self, curve: Option<&HyperellipticCurve>) -> MultiPoly {
        // common denominator of all parts
        let mut den = MultiPoly::one_poly(&[]);
        for c in self.terms.values() {
            for part in [c.even(), c.odd()] {
                if part.is_zero() {
                    continue;
                }
                let g = gcd_poly(&den, part.den()).unwrap_or_else(|_| MultiPoly::one_poly(&[]));
                den = den.mul(&part.den().exact_div(&g).unwrap());
            }
        }
        let w = MultiPoly::var("w");
        let mut out = MultiPoly::zero(&[]);
        for (e, c) in &self.terms {
            let mut mono = MultiPoly::one_poly(&[]);
            for (k, exp) in e.iter().enumerate() {
                mono = mono.mul(&MultiPoly::var(PSI_JETS[k]).pow(*exp));
            }
            for (part, with_w) in [(c.even(), false), (c.odd(), true)] {
                if part.is_zero() {
                    continue;
                }
                let scale = den.exact_div(part.den()).unwrap();
                let mut t = part.num().mul(&scale).mul(&mono);
                if with_w {
                    t = t.mul(&w);
                }
                out = out.add(&t);
            }
        }
        if let Some(c) = curve {
            out = reduce_w(&out, "w", c.p());
        }
        out.normalize_primitive()
    }
}

/// The two cleared relations satisfied by the jets of the differential
/// psi = R^{-1} xdot: the base relations
///   2 psi'' psi - 3 psi'^2 = 2 Q psi^4,
///   psi''' psi^2 - 6 psi'' psi' psi + 6 psi'^3 = Q' psi^6
/// transported through psi -> R psi, (R)dot -> R R' psi.
pub fn psi_relations(
    q: &crate::fuchsian::FuchsianQ,
    r: Option<&CurveFunction>,
) -> Result<Relations> {
    let curve = q.curve().cloned();
    let field = FunctionField {
        curve: curve.as_ref(),
        var: q.var().to_string(),
    };
    let r_cf = r.cloned().unwrap_or_else(CurveFunction::one);
    if r_cf.is_zero() {
        return Err(Error::DegenerateCoordinate);
    }
    // xdot = R * p0 as a jet polynomial
    let xdot = PsiPoly::scalar(r_cf.clone()).mul(&PsiPoly::jet(0), &field);
    // old jets: q0 = xdot, q_{k+1} = d/dtau q_k
    let q0 = xdot.clone();
    let q1 = q0.tau_derivative(&field, &xdot);
    let q2 = q1.tau_derivative(&field, &xdot);
    let q3 = q2.tau_derivative(&field, &xdot);
    let q_scalar = PsiPoly::scalar(q.q().clone());
    let dq_scalar = PsiPoly::scalar(field.td(q.q()));
    let two = |p: PsiPoly| p.add(&p.clone());
    // A1 = 2 q2 q0 - 3 q1^2 - 2 Q q0^4
    let a1 = two(q2.mul(&q0, &field))
        .sub(&q1.pow(2, &field).mul(&PsiPoly::scalar(CurveFunction::one().scale(&Rational::from_integer(3.into()))), &field))
        .sub(&two(q_scalar.mul(&q0.pow(4, &field), &field)));
    // A2 = q3 q0^2 - 6 q2 q1 q0 + 6 q1^3 - Q' q0^6
    let six = CurveFunction::one().scale(&Rational::from_integer(6.into()));
    let a2 = q3
        .mul(&q0.pow(2, &field), &field)
        .sub(&q2.mul(&q1, &field).mul(&q0, &field).mul(&PsiPoly::scalar(six.clone()), &field))
        .add(&q1.pow(3, &field).mul(&PsiPoly::scalar(six), &field))
        .sub(&dq_scalar.mul(&q0.pow(6, &field), &field));

    let z_var = q.var().to_string();
    let p1 = a1.clear(curve.as_ref());
    let p2 = a2.clear(curve.as_ref());
    let log = vec![format!(
        "differential relations: deg_{z_var}(A1) = {}, deg_{z_var}(A2) = {}",
        p1.degree(&z_var),
        p2.degree(&z_var)
    )];
    Ok(Relations {
        w_var: curve.as_ref().map(|_| "w".to_string()),
        p1,
        p2,
        curve,
        z_var,
        space: JetSpace::Differential,
        log,
    })
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct OdeEvaluation {
    /// Value of Xi at the jets.
    pub value: Complex64,
    /// Sum of the magnitudes of the evaluated terms.
    pub term_norm: f64,
    /// Euclidean norm of the (scaled) coefficient vector.
    pub coeff_norm: f64,
    /// |value| / max(coeff_norm, term_norm): the acceptance residual.
    pub relative: f64,
}

impl DerivedOde {
    /// Weighted (scaling) degree of the ODE in its jets.
    pub fn weighted_degree(&self) -> u32 {
        let weights: Vec<u32> = self
            .xi
            .vars()
            .iter()
            .map(|v| {
                self.jet_vars
                    .iter()
                    .position(|j| j == v)
                    .map(|k| JET_WEIGHTS[k])
                    .unwrap_or(0)
            })
            .collect();
        self.xi.weighted_degree(&weights)
    }

    /// Third-order check: the top jet must occur.
    pub fn is_third_order(&self) -> bool {
        self.xi.degree(self.jet_vars[3]) > 0
    }

    /// Evaluates Xi at numeric jets.  Coefficients are pre-scaled by a power
    /// of two so arbitrarily large integer coefficients stay in f64 range;
    /// the relative residual is scale-invariant.  The compact curvature form
    /// is preferred when available (far better conditioned).
    pub fn evaluate(&self, jets: &[Complex64; 4]) -> OdeEvaluation {
        let (poly, values): (&MultiPoly, Vec<(String, Complex64)>) = match &self.compact {
            Some(c) => {
                let g0 = jets[0];
                let g1 = jets[1];
                let g2 = jets[2];
                let g3 = jets[3];
                let k = g1 - 0.5 * g0 * g0;
                let gk = g2 - 3.0 * g0 * g1 + g0 * g0 * g0;
                let g2k = g3 - 6.0 * g0 * g2 - 3.0 * g1 * g1 + 12.0 * g0 * g0 * g1
                    - 3.0 * g0 * g0 * g0 * g0;
                (
                    c,
                    vec![
                        ("k0".to_string(), k),
                        ("k1".to_string(), gk),
                        ("k2".to_string(), g2k),
                    ],
                )
            }
            None => (
                &self.xi,
                self.jet_vars
                    .iter()
                    .zip(jets)
                    .map(|(v, j)| (v.to_string(), *j))
                    .collect(),
            ),
        };
        let shift = poly.terms().map(|(_, c)| log2_estimate(c)).max().unwrap_or(0);
        let vars = poly.vars().to_vec();
        let value_of = |v: &str| -> Complex64 {
            values
                .iter()
                .find(|(name, _)| name == v)
                .map(|(_, x)| *x)
                .unwrap_or_else(|| Complex64::new(1.0, 0.0))
        };
        // power tables per variable
        let mut powers: Vec<Vec<Complex64>> = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            let maxe = poly.terms().map(|(m, _)| m.0[i]).max().unwrap_or(0);
            let base = value_of(v);
            let mut tab = vec![Complex64::new(1.0, 0.0); maxe as usize + 1];
            for e in 1..=maxe as usize {
                tab[e] = tab[e - 1] * base;
            }
            powers.push(tab);
        }
        let mut value = Complex64::new(0.0, 0.0);
        let mut term_norm = 0.0f64;
        let mut coeff_sq = 0.0f64;
        for (m, c) in poly.terms() {
            let cf = to_f64_shifted(c, shift);
            coeff_sq += cf * cf;
            let mut t = Complex64::new(cf, 0.0);
            for (i, e) in m.0.iter().enumerate() {
                t *= powers[i][*e as usize];
            }
            value += t;
            term_norm += t.norm();
        }
        let coeff_norm = coeff_sq.sqrt();
        let denom = coeff_norm.max(term_norm).max(f64::MIN_POSITIVE);
        OdeEvaluation {
            value,
            term_norm,
            coeff_norm,
            relative: value.norm() / denom,
        }
    }

    /// Canonical text of the ODE polynomial.
    pub fn canonical_text(&self) -> String {
        self.xi.to_string()
    }
}

/// Monomial accessor used by the serializers.
pub fn jet_exponents(m: &Mono, vars: &[String], jet_vars: &[&'static str; 4]) -> [u32; 4] {
    let mut out = [0u32; 4];
    for (i, v) in vars.iter().enumerate() {
        if let Some(k) = jet_vars.iter().position(|j| j == v) {
            out[k] = m.0[i];
        }
    }
    out
}
