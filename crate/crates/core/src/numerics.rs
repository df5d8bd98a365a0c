//! Floating-point verification layer: complex-path integration of the
//! second-order potential equation, monodromy matrices and elliptic-order
//! tests, and connection jets computed by exact-in-Q Taylor recursion with
//! the linear equation closing all higher derivatives.

use num::complex::Complex64;

use crate::connection::ConnectionSpec;
use crate::error::{Error, Result};
use crate::fuchsian::FuchsianQ;
use crate::poly::{squarefree_part, MultiPoly};
use crate::ratfunc::RatFunc;
use crate::rational::rational_to_c64;

// ---------------------------------------------------------------------------
// polynomial roots (for locating singular points numerically)
// ---------------------------------------------------------------------------

/// Complex roots of a univariate polynomial by Durand-Kerner iteration.
/// The input is made square-free first, so multiple roots are no obstacle.
pub fn complex_roots(p: &MultiPoly, var: &str) -> Result<Vec<Complex64>> {
    let sf = if p.degree(var) >= 2 {
        squarefree_part(p, var)?
    } else {
        p.clone()
    };
    let coeffs: Vec<Complex64> = sf
        .univariate_in(var)
        .iter()
        .map(|c| rational_to_c64(&c.constant_value().expect("univariate")))
        .collect();
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |x: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in monic.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    // spread the initial guesses on a non-real circle
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            Complex64::new(0.4, 0.9).powf(1.0)
                * Complex64::from_polar(1.0 + 0.1 * k as f64, 0.7 + 2.3 * k as f64)
        })
        .collect();
    for _ in 0..200 {
        let mut shift = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            shift = shift.max(delta.norm());
        }
        if shift < 1e-13 {
            break;
        }
    }
    Ok(roots)
}

// ---------------------------------------------------------------------------
// paths
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PathSpec {
    pub vertices: Vec<Complex64>,
    pub max_step: f64,
    pub tolerance: f64,
    /// Required distance from every recorded singular point.
    pub margin: f64,
}

impl PathSpec {
    pub fn new(vertices: Vec<Complex64>) -> PathSpec {
        PathSpec {
            vertices,
            max_step: 0.1,
            tolerance: 1e-10,
            margin: 1e-3,
        }
    }

    /// Closed circular loop around `center`, as a polygon.
    pub fn circle(center: Complex64, radius: f64, segments: usize) -> PathSpec {
        let mut vertices = Vec::with_capacity(segments + 1);
        for k in 0..=segments {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (segments as f64);
            vertices.push(center + Complex64::from_polar(radius, th));
        }
        PathSpec::new(vertices)
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.len() >= 2
            && (self.vertices[0] - self.vertices[self.vertices.len() - 1]).norm() < 1e-14
    }

    pub fn validate(&self, singular: &[Complex64]) -> Result<()> {
        if self.vertices.len() < 2 {
            return Err(Error::InvalidInput("path needs at least two vertices".into()));
        }
        for w in self.vertices.windows(2) {
            if (w[0] - w[1]).norm() == 0.0 {
                return Err(Error::InvalidInput("consecutive vertices coincide".into()));
            }
            for s in singular {
                if segment_distance(w[0], w[1], *s) < self.margin {
                    return Err(Error::InvalidInput(format!(
                        "path passes within {} of the singular point {s}",
                        self.margin
                    )));
                }
            }
        }
        Ok(())
    }
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / (ab.norm_sqr());
    let t = t.clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

// ---------------------------------------------------------------------------
// the potential equation along a path
// ---------------------------------------------------------------------------

/// Two independent solutions and their derivatives at a point of the path,
/// plus the sheet value when a curve is being tracked.
#[derive(Clone, Copy, Debug)]
pub struct PsiState {
    pub x: Complex64,
    pub psi1: Complex64,
    pub psi1x: Complex64,
    pub psi2: Complex64,
    pub psi2x: Complex64,
    pub w: Option<Complex64>,
}

impl PsiState {
    /// Standard basis at the start point: Psi1 = 1, Psi2 = x - x0 locally.
    pub fn standard(x: Complex64) -> PsiState {
        PsiState {
            x,
            psi1: Complex64::new(1.0, 0.0),
            psi1x: Complex64::new(0.0, 0.0),
            psi2: Complex64::new(0.0, 0.0),
            psi2x: Complex64::new(1.0, 0.0),
            w: None,
        }
    }

    pub fn with_sheet(mut self, w: Complex64) -> PsiState {
        self.w = Some(w);
        self
    }

    pub fn wronskian(&self) -> Complex64 {
        self.psi1 * self.psi2x - self.psi2 * self.psi1x
    }

    pub fn tau(&self) -> Complex64 {
        self.psi2 / self.psi1
    }
}

/// Evaluation context for the potential along a path: univariate rational
/// in the path variable (the layer integrates genus-zero-style equations;
/// curve-valued potentials enter through the tracked sheet in the jets).
struct QEval<'a> {
    q: &'a RatFunc,
    curve_p: Option<&'a MultiPoly>,
    var: String,
}

impl<'a> QEval<'a> {
    fn eval(&self, x: Complex64) -> Result<Complex64> {
        if self.q.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.q.eval1(x)
    }

    fn dp_over_2w(&self, x: Complex64, w: Complex64) -> Complex64 {
        match self.curve_p {
            Some(p) => {
                let dp = p.derivative(&self.var);
                let v = dp.eval_complex(&|_| x);
                v / (2.0 * w)
            }
            None => Complex64::new(0.0, 0.0),
        }
    }
}

const DOPRI_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DOPRI_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DOPRI_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type StateVec = [Complex64; 5];

fn rhs(q: &QEval, dir: Complex64, x0: Complex64, s: f64, y: &StateVec) -> Result<StateVec> {
    let x = x0 + dir * s;
    let qv = q.eval(x)?;
    let half_q = 0.5 * qv;
    let w_dot = if y[4].norm() > 0.0 {
        q.dp_over_2w(x, y[4])
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok([
        dir * y[1],
        dir * half_q * y[0],
        dir * y[3],
        dir * half_q * y[2],
        dir * w_dot,
    ])
}

/// Continues the basis along one straight segment with adaptive step control.
fn integrate_segment(
    q: &QEval,
    a: Complex64,
    b: Complex64,
    state: &mut PsiState,
    tol: f64,
    max_step: f64,
    steps_accum: &mut usize,
) -> Result<()> {
    let dir = b - a;
    let seg_len = dir.norm();
    let mut s = 0.0f64;
    let mut h = (max_step / seg_len).min(0.5).max(1e-6);
    let mut y: StateVec = [
        state.psi1,
        state.psi1x,
        state.psi2,
        state.psi2x,
        state.w.unwrap_or(Complex64::new(0.0, 0.0)),
    ];
    let mut k = [[Complex64::new(0.0, 0.0); 5]; 7];
    while s < 1.0 {
        if s + h > 1.0 {
            h = 1.0 - s;
        }
        k[0] = rhs(q, dir, a, s, &y)?;
        for stage in 0..6 {
            let mut yt = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let c = DOPRI_A[stage][j] * h;
                for (yt_i, kj_i) in yt.iter_mut().zip(kj.iter()) {
                    *yt_i += c * kj_i;
                }
            }
            let snew = s + h * [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][stage];
            k[stage + 1] = rhs(q, dir, a, snew, &yt)?;
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..5 {
            let mut acc5 = Complex64::new(0.0, 0.0);
            let mut acc4 = Complex64::new(0.0, 0.0);
            for j in 0..7 {
                acc5 += DOPRI_B5[j] * k[j][i];
                acc4 += DOPRI_B4[j] * k[j][i];
            }
            y5[i] += h * acc5;
            err = err.max((h * (acc5 - acc4)).norm());
        }
        let scale = y.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
        let tol_here = tol * scale;
        if err <= tol_here {
            s += h;
            y = y5;
            *steps_accum += 1;
            if *steps_accum % 64 == 0 {
                // renormalize the Wronskian drift into the second solution
                let wr = y[0] * y[3] - y[2] * y[1];
                if (wr - Complex64::new(1.0, 0.0)).norm() < 1e-6 {
                    y[2] /= wr;
                    y[3] /= wr;
                }
            }
        }
        let factor = if err == 0.0 {
            2.0
        } else {
            0.9 * (tol_here / err).powf(0.2)
        };
        h *= factor.clamp(0.2, 2.0);
        if h < 1e-13 {
            return Err(Error::SingularityEncounter(format!("{}", a + dir * s)));
        }
    }
    state.x = b;
    state.psi1 = y[0];
    state.psi1x = y[1];
    state.psi2 = y[2];
    state.psi2x = y[3];
    if state.w.is_some() {
        state.w = Some(y[4]);
    }
    Ok(())
}

/// Integrates the potential equation along the path, continuing both basis
/// solutions (and the curve sheet when the initial state carries one).
pub fn integrate_psi(
    q: &FuchsianQ,
    path: &PathSpec,
    init: &PsiState,
) -> Result<PsiState> {
    let qr = q.rational()?;
    let var = q.var().to_string();
    let singular = if qr.is_zero() {
        Vec::new()
    } else {
        complex_roots(qr.den(), &var)?
    };
    path.validate(&singular)?;
    if (init.wronskian() - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidInput("initial Wronskian must be 1".into()));
    }
    let qe = QEval {
        q: qr,
        curve_p: q.curve().map(|c| c.p()),
        var,
    };
    let mut state = *init;
    let mut steps = 0usize;
    for wpair in path.vertices.windows(2) {
        integrate_segment(
            &qe,
            wpair[0],
            wpair[1],
            &mut state,
            path.tolerance,
            path.max_step,
            &mut steps,
        )?;
    }
    let drift = (state.wronskian() - Complex64::new(1.0, 0.0)).norm();
    if drift > 1e-8 {
        return Err(Error::ConsistencyFailure {
            got: (drift / 1e-8) as i64,
            expected: 0,
        });
    }
    Ok(state)
}

/// Integrates once around a closed loop and expresses the continued basis in
/// the original one: returns M with (continued) = M (original).
pub fn monodromy(q: &FuchsianQ, loop_path: &PathSpec, base: &PsiState) -> Result<[[Complex64; 2]; 2]> {
    if !loop_path.is_closed() {
        return Err(Error::InvalidInput("monodromy needs a closed loop".into()));
    }
    let out = integrate_psi(q, loop_path, base)?;
    // with the standard basis at the base point, the continued values are the
    // matrix entries directly
    Ok([[out.psi1, out.psi1x], [out.psi2, out.psi2x]])
}

pub fn mat_det(m: &[[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_trace(m: &[[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] + m[1][1]
}

pub fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for (k, bk) in b.iter().enumerate() {
                out[i][j] += a[i][k] * bk[j];
            }
        }
    }
    out
}

/// |tr M| = 2 |cos(pi/p)| within tolerance: elliptic of order p.
pub fn elliptic_order_check(m: &[[Complex64; 2]; 2], p: u32, tol: f64) -> (bool, f64) {
    let t = mat_trace(m).norm();
    let target = 2.0 * (std::f64::consts::PI / p as f64).cos().abs();
    let residual = (t - target).abs();
    (residual < tol, residual)
}

// ---------------------------------------------------------------------------
// jets by Taylor recursion
// ---------------------------------------------------------------------------

/// Numeric jets of the connection: value and three derivatives at one point.
#[derive(Clone, Copy, Debug)]
pub struct JetValue {
    pub tau: Complex64,
    pub g: [Complex64; 4],
}

impl JetValue {
    /// The scaling orbit of the general solution: jets of s Gamma(s tau),
    /// i.e. g_k -> s^{k+1} g_k.  Real s > 0 keeps the upper half-plane, and
    /// each rescaled jet is again an exact solution of the derived equation.
    pub fn rescaled(&self, s: f64) -> JetValue {
        let mut g = self.g;
        let mut pow = 1.0;
        for gk in g.iter_mut() {
            pow *= s;
            *gk *= pow;
        }
        JetValue {
            tau: self.tau / s,
            g,
        }
    }
}

/// Truncated complex Taylor jets for the recursion.
#[derive(Clone, Debug)]
struct TJet {
    c: Vec<Complex64>,
}

impl TJet {
    fn constant(v: Complex64, n: usize) -> TJet {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = v;
        TJet { c }
    }

    fn add(&self, o: &TJet) -> TJet {
        TJet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    fn sub(&self, o: &TJet) -> TJet {
        TJet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    fn mul(&self, o: &TJet) -> TJet {
        let n = self.c.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            if self.c[i].norm() == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        TJet { c }
    }

    fn div(&self, o: &TJet) -> Result<TJet> {
        if o.c[0].norm() < 1e-300 {
            return Err(Error::PoleProximity(o.c[0].norm()));
        }
        let n = self.c.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= o.c[j] * c[k - j];
            }
            c[k] = acc / o.c[0];
        }
        Ok(TJet { c })
    }

    fn scale(&self, v: Complex64) -> TJet {
        TJet {
            c: self.c.iter().map(|x| x * v).collect(),
        }
    }

    /// d/dtau as a jet (shift with factorial factors on Taylor coefficients).
    fn derivative(&self) -> TJet {
        let n = self.c.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for k in 1..n {
            c[k - 1] = self.c[k] * k as f64;
        }
        TJet { c }
    }

    /// k-th derivative value at the base point.
    fn deriv_value(&self, k: usize) -> Complex64 {
        let mut f = 1.0;
        for i in 1..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }
}

fn poly_on_jet(p: &MultiPoly, var: &str, z: &TJet) -> TJet {
    let n = z.c.len();
    let mut acc = TJet::constant(Complex64::new(0.0, 0.0), n);
    for c in p.univariate_in(var).iter().rev() {
        acc = acc.mul(z);
        acc.c[0] += rational_to_c64(&c.constant_value().expect("univariate"));
    }
    acc
}

fn ratfunc_on_jet(f: &RatFunc, var: &str, z: &TJet) -> Result<TJet> {
    let n = poly_on_jet(f.num(), var, z);
    let d = poly_on_jet(f.den(), var, z);
    n.div(&d)
}

fn curvefn_on_jet(f: &crate::curve::CurveFunction, var: &str, z: &TJet, w: Option<&TJet>) -> Result<TJet> {
    let len = z.c.len();
    let mut acc = TJet::constant(Complex64::new(0.0, 0.0), len);
    if !f.even().is_zero() {
        acc = acc.add(&ratfunc_on_jet(f.even(), var, z)?);
    }
    if !f.odd().is_zero() {
        let ws = w.ok_or_else(|| Error::InvalidInput("odd part needs a sheet value".into()))?;
        acc = acc.add(&ratfunc_on_jet(f.odd(), var, z)?.mul(ws));
    }
    Ok(acc)
}

/// Builds tau-jets of (x, w, psi1, psi1') from a path state by the closed
/// recursion x-dot = psi1^2, psi1-dot = psi1' psi1^2, psi1'-dot = Q psi1^3/2,
/// w-dot = P' psi1^2 / (2w), then evaluates the connection on them.
pub fn tau_and_jets(
    state: &PsiState,
    q: &FuchsianQ,
    conn: &ConnectionSpec,
) -> Result<JetValue> {
    if state.psi1.norm() < 1e-10 {
        return Err(Error::CoordinateDegeneracy(state.psi1.norm()));
    }
    let order = 8usize;
    let var = q.var().to_string();
    let qr = q.rational()?.clone();
    let need_w = conn.curve.is_some();
    if need_w && state.w.is_none() {
        return Err(Error::InvalidInput(
            "hyperelliptic jets need the sheet value in the state".into(),
        ));
    }
    let mut x = TJet::constant(state.x, order);
    let mut w = TJet::constant(state.w.unwrap_or(Complex64::new(1.0, 0.0)), order);
    let mut psi = TJet::constant(state.psi1, order);
    let mut phi = TJet::constant(state.psi1x, order);
    let dp = conn
        .curve
        .as_ref()
        .map(|c| c.p().derivative(c.var()));
    // fill Taylor coefficients order by order
    for k in 0..order - 1 {
        let psi2 = psi.mul(&psi);
        let x_dot = psi2.clone();
        let psi_dot = phi.mul(&psi2);
        let qv = ratfunc_on_jet(&qr, &var, &x)?;
        let phi_dot = qv.mul(&psi.mul(&psi2)).scale(Complex64::new(0.5, 0.0));
        let w_dot = match &dp {
            Some(dp) => poly_on_jet(dp, &var, &x)
                .mul(&psi2)
                .div(&w.scale(Complex64::new(2.0, 0.0)))?,
            None => TJet::constant(Complex64::new(0.0, 0.0), order),
        };
        let step = |target: &mut TJet, dot: &TJet| {
            target.c[k + 1] = dot.c[k] / (k as f64 + 1.0);
        };
        step(&mut x, &x_dot);
        step(&mut psi, &psi_dot);
        step(&mut phi, &phi_dot);
        if need_w {
            step(&mut w, &w_dot);
        }
    }
    // Gamma = d/dtau ln(D0 x-dot) + D1 x-dot
    let x_dot = psi.mul(&psi);
    let w_opt = if need_w { Some(&w) } else { None };
    let d0 = curvefn_on_jet(&conn.d0, &var, &x, w_opt)?;
    let core = d0.mul(&x_dot);
    let mut gamma = core.derivative().div(&core)?;
    if !conn.d1.is_zero() {
        gamma = gamma.add(&curvefn_on_jet(&conn.d1, &var, &x, w_opt)?.mul(&x_dot));
    }
    Ok(JetValue {
        tau: state.tau(),
        g: [
            gamma.deriv_value(0),
            gamma.deriv_value(1),
            gamma.deriv_value(2),
            gamma.deriv_value(3),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{build_genus0_connection, build_hyperelliptic_connection};
    use crate::fuchsian::{whittaker_w, whittaker_z};
    use crate::rational::q_i64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_cyclotomic_like() {
        let p = RatFunc::parse("z^3+1").unwrap().expect_poly().unwrap();
        let mut roots = complex_roots(&p, "z").unwrap();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert_eq!(roots.len(), 3);
        for r in &roots {
            let v = p.eval_complex(&|_| *r);
            assert!(v.norm() < 1e-9, "residual {v}");
        }
    }

    #[test]
    fn free_equation_integrates_exactly() {
        // Q = 0: Psi2 = x, so tau = x at the endpoint
        let q = FuchsianQ::from_ratfunc(RatFunc::zero(), "x");
        let path = PathSpec::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let out = integrate_psi(&q, &path, &PsiState::standard(c(0.0, 0.0))).unwrap();
        assert!((out.psi2 - c(1.0, 0.0)).norm() < 1e-10);
        assert!((out.psi2x - c(1.0, 0.0)).norm() < 1e-12);
        assert!((out.tau() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn constant_potential_matches_closed_form() {
        // Q = 2: Psi'' = Psi, basis (cosh, sinh)
        let q = FuchsianQ::from_ratfunc(RatFunc::parse("2").unwrap(), "x");
        let path = PathSpec::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let out = integrate_psi(&q, &path, &PsiState::standard(c(0.0, 0.0))).unwrap();
        let e = 1.0f64.exp();
        let cosh1 = (e + 1.0 / e) / 2.0;
        let sinh1 = (e - 1.0 / e) / 2.0;
        assert!((out.psi1 - c(cosh1, 0.0)).norm() < 1e-10);
        assert!((out.psi1x - c(sinh1, 0.0)).norm() < 1e-10);
        assert!((out.psi2 - c(sinh1, 0.0)).norm() < 1e-10);
        assert!((out.psi2x - c(cosh1, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn monodromy_identity_for_free_equation() {
        let q = FuchsianQ::from_ratfunc(RatFunc::zero(), "x");
        let path = PathSpec::circle(c(0.3, 0.2), 0.5, 12);
        let m = monodromy(&q, &path, &PsiState::standard(path.vertices[0])).unwrap();
        assert!((m[0][0] - c(1.0, 0.0)).norm() < 1e-9);
        assert!(m[0][1].norm() < 1e-9);
        assert!(m[1][0].norm() < 1e-9);
        assert!((m[1][1] - c(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn whittaker_w_order_three_loop() {
        // small loop around w = 1: |tr M| = 1 (elliptic of order 3)
        let q = whittaker_w(1).unwrap();
        let path = PathSpec::circle(c(1.0, 0.0), 0.35, 20);
        let m = monodromy(&q, &path, &PsiState::standard(path.vertices[0])).unwrap();
        assert!((mat_det(&m) - c(1.0, 0.0)).norm() < 1e-8);
        let (ok, res) = elliptic_order_check(&m, 3, 1e-6);
        assert!(ok, "trace residual {res}, tr = {}", mat_trace(&m));
    }

    #[test]
    fn whittaker_z_order_two_loops() {
        // loops around each root of z^3 + 1: tr M = 0
        let q = whittaker_z(1).unwrap();
        let roots = complex_roots(
            q.rational().unwrap().den(),
            "z",
        )
        .unwrap();
        assert_eq!(roots.len(), 3);
        for r in roots {
            let path = PathSpec::circle(r, 0.4, 20);
            let m = monodromy(&q, &path, &PsiState::standard(path.vertices[0])).unwrap();
            let (ok, res) = elliptic_order_check(&m, 2, 1e-6);
            assert!(ok, "trace residual {res} at root {r}");
        }
    }

    #[test]
    fn composite_loop_is_product() {
        let q = whittaker_w(1).unwrap();
        // base point between the two singular points, joined loops
        let base = c(0.0, 0.8);
        let leg = |center: Complex64| -> PathSpec {
            let circle = PathSpec::circle(center, 0.3, 16);
            let mut v = vec![base];
            v.extend(circle.vertices.iter().cloned());
            v.push(base);
            PathSpec::new(v)
        };
        let p1 = leg(c(1.0, 0.0));
        let p2 = leg(c(-1.0, 0.0));
        let m1 = monodromy(&q, &p1, &PsiState::standard(base)).unwrap();
        let m2 = monodromy(&q, &p2, &PsiState::standard(base)).unwrap();
        // composite: run p1 then p2 (dropping the repeated base vertex)
        let mut v = p1.vertices.clone();
        v.extend(p2.vertices.iter().skip(1).cloned());
        let comp = PathSpec::new(v);
        let mc = monodromy(&q, &comp, &PsiState::standard(base)).unwrap();
        // rows of M are the continued solutions, so composition multiplies
        // in path order
        let prod = mat_mul(&m1, &m2);
        let mut err = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                err = err.max((mc[i][j] - prod[i][j]).norm());
            }
        }
        assert!(err < 1e-6, "composition error {err}");
    }

    #[test]
    fn jets_flat_case() {
        let q = FuchsianQ::from_ratfunc(RatFunc::zero(), "x");
        let conn = build_genus0_connection(&q, &RatFunc::zero()).unwrap();
        let state = PsiState::standard(c(0.4, 0.1));
        let j = tau_and_jets(&state, &q, &conn).unwrap();
        for g in j.g {
            assert!(g.norm() < 1e-14);
        }
    }

    #[test]
    fn jets_match_finite_differences_whittaker_g1() {
        // continue along a short path, compare g1..g3 against finite
        // differences of g0 in the x-parametrization: d/dtau = psi1^2 d/dx
        let q = whittaker_z(1).unwrap();
        let curve = q.curve().unwrap().clone();
        let conn = build_hyperelliptic_connection(&curve, &[q_i64(1)]).unwrap();
        let x0 = c(0.3, 0.2);
        let w0 = {
            let pv = curve.p().eval_complex(&|_| x0);
            pv.sqrt()
        };
        let jets_at = |x: Complex64| -> JetValue {
            let path = PathSpec::new(vec![x0, x]);
            let init = PsiState::standard(x0).with_sheet(w0);
            let st = if (x - x0).norm() < 1e-14 {
                init
            } else {
                integrate_psi(&q, &path, &init).unwrap()
            };
            tau_and_jets(&st, &q, &conn).unwrap()
        };
        let h = 1e-4;
        let base = jets_at(x0);
        let plus = jets_at(x0 + h);
        let minus = jets_at(x0 - h);
        // dx/dtau at the base point is psi1^2 = 1 for the standard basis
        let dg0_dx = (plus.g[0] - minus.g[0]) / (2.0 * h);
        let fd_g1 = dg0_dx; // times psi1^2 = 1
        let rel = (fd_g1 - base.g[1]).norm() / base.g[1].norm();
        assert!(rel < 1e-5, "g1 mismatch {rel}");
        let dg1_dx = (plus.g[1] - minus.g[1]) / (2.0 * h);
        let rel = (dg1_dx - base.g[2]).norm() / base.g[2].norm();
        assert!(rel < 1e-5, "g2 mismatch {rel}");
        let dg2_dx = (plus.g[2] - minus.g[2]) / (2.0 * h);
        let rel = (dg2_dx - base.g[3]).norm() / base.g[3].norm();
        assert!(rel < 1e-4, "g3 mismatch {rel}");
    }

    #[test]
    fn jets_invariant_under_basis_shift() {
        // g0 depends on Psi1 only: shifting Psi2 by c Psi1 changes nothing
        let q = whittaker_z(1).unwrap();
        let curve = q.curve().unwrap().clone();
        let conn = build_hyperelliptic_connection(&curve, &[q_i64(1)]).unwrap();
        let x0 = c(0.3, 0.2);
        let w0 = curve.p().eval_complex(&|_| x0).sqrt();
        let path = PathSpec::new(vec![x0, c(0.5, 0.3)]);
        let st = integrate_psi(&q, &path, &PsiState::standard(x0).with_sheet(w0)).unwrap();
        let mut shifted = st;
        shifted.psi2 += 0.7 * st.psi1;
        shifted.psi2x += 0.7 * st.psi1x;
        let a = tau_and_jets(&st, &q, &conn).unwrap();
        let b = tau_and_jets(&shifted, &q, &conn).unwrap();
        for k in 0..4 {
            assert!((a.g[k] - b.g[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn rescaled_jets() {
        let j = JetValue {
            tau: c(0.0, 1.0),
            g: [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
        };
        let r = j.rescaled(0.5);
        assert!((r.g[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((r.g[1] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((r.g[2] - c(0.375, 0.0)).norm() < 1e-15);
        assert!((r.g[3] - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn path_validation() {
        let q = whittaker_w(1).unwrap();
        // path through the singular point w = 1 is rejected
        let path = PathSpec::new(vec![c(0.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            integrate_psi(&q, &path, &PsiState::standard(c(0.0, 0.0))),
            Err(Error::InvalidInput(_))
        ));
    }
}
