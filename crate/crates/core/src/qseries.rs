//! q-series oracles: the weight-2 quasi-modular Eisenstein series and the
//! level-2 modular function built from theta quotients, with term-wise
//! derivatives.  These drive the floating-point verification suites.

use num::complex::Complex64;
use num::{BigInt, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fuchsian::MobiusMap;

pub const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QSeriesKind {
    /// E2 = 1 - 24 sum sigma_1(n) q^n with q = exp(2 pi i tau).
    EisensteinE2,
    /// lambda = theta2^4 / theta3^4 with q = exp(pi i tau).
    ModularLambda,
}

#[derive(Clone, Debug)]
pub struct QSeriesOracle {
    pub kind: QSeriesKind,
    pub terms: usize,
    /// Ascending q-coefficients a_0..a_terms (exact integers).
    coeffs: Vec<BigInt>,
    /// Nome multiplier: q = exp(c pi i tau).
    nome: f64,
}

/// Lowest admissible Im(tau); keeps |q| < 0.4 for either nome convention.
pub const MIN_IM_TAU: f64 = 0.3;

fn sigma1(n: usize) -> i64 {
    let mut s = 0i64;
    for d in 1..=n {
        if n % d == 0 {
            s += d as i64;
        }
    }
    s
}

fn poly_mul_trunc(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); n + 1];
    for (i, ai) in a.iter().enumerate().take(n + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j > n {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Series division a/b truncated at order n; b must start with 1.
fn poly_div_trunc(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    assert!(b[0].is_one());
    let mut out = vec![BigInt::zero(); n + 1];
    for k in 0..=n {
        let mut acc = a.get(k).cloned().unwrap_or_else(BigInt::zero);
        for j in 1..=k {
            if let Some(bj) = b.get(j) {
                acc -= bj * &out[k - j];
            }
        }
        out[k] = acc;
    }
    out
}

impl QSeriesOracle {
    pub fn new(kind: QSeriesKind, terms: usize) -> Result<QSeriesOracle> {
        if terms < 10 {
            return Err(Error::InvalidInput("need at least 10 series terms".into()));
        }
        let (coeffs, nome) = match kind {
            QSeriesKind::EisensteinE2 => {
                let mut c = vec![BigInt::one()];
                for n in 1..=terms {
                    c.push(BigInt::from(-24 * sigma1(n)));
                }
                (c, 2.0)
            }
            QSeriesKind::ModularLambda => {
                // theta2^4 = 16 q (sum q^{n(n+1)})^4, theta3 = 1 + 2 sum q^{n^2}
                let n = terms;
                let mut s2 = vec![BigInt::zero(); n + 1];
                let mut k = 0usize;
                while k * (k + 1) <= n {
                    s2[k * (k + 1)] += BigInt::one();
                    k += 1;
                }
                let mut t3 = vec![BigInt::zero(); n + 1];
                t3[0] = BigInt::one();
                let mut k = 1usize;
                while k * k <= n {
                    t3[k * k] += BigInt::from(2);
                    k += 1;
                }
                let s2_2 = poly_mul_trunc(&s2, &s2, n);
                let s2_4 = poly_mul_trunc(&s2_2, &s2_2, n);
                let t3_2 = poly_mul_trunc(&t3, &t3, n);
                let t3_4 = poly_mul_trunc(&t3_2, &t3_2, n);
                let ratio = poly_div_trunc(&s2_4, &t3_4, n);
                // lambda = 16 q * ratio
                let mut c = vec![BigInt::zero(); n + 1];
                for i in 0..n {
                    c[i + 1] = &ratio[i] * BigInt::from(16);
                }
                (c, 1.0)
            }
        };
        Ok(QSeriesOracle {
            kind,
            terms,
            coeffs,
            nome,
        })
    }

    pub fn coefficient_i64(&self, n: usize) -> Option<i64> {
        self.coeffs.get(n).and_then(|c| c.to_i64())
    }

    fn check_domain(&self, tau: Complex64) -> Result<()> {
        if tau.im < MIN_IM_TAU {
            return Err(Error::OracleDomain(format!(
                "Im(tau) = {} below {MIN_IM_TAU}",
                tau.im
            )));
        }
        Ok(())
    }

    /// Value and the first `k` tau-derivatives by term-wise differentiation.
    pub fn eval_derivs(&self, tau: Complex64, k: usize) -> Result<Vec<Complex64>> {
        self.check_domain(tau)?;
        let q = (Complex64::new(0.0, self.nome * PI) * tau).exp();
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        let mut qn = Complex64::new(1.0, 0.0);
        for (n, c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                qn *= q;
            }
            if c.is_zero() {
                continue;
            }
            let cf = c.to_f64().unwrap_or(0.0);
            // d/dtau q^n = (i pi nome n) q^n
            let factor = Complex64::new(0.0, self.nome * PI * n as f64);
            let mut f = Complex64::new(1.0, 0.0);
            for item in out.iter_mut().take(k + 1) {
                *item += cf * f * qn;
                f *= factor;
            }
        }
        Ok(out)
    }

    pub fn eval(&self, tau: Complex64) -> Result<Complex64> {
        Ok(self.eval_derivs(tau, 0)?[0])
    }
}

// ---------------------------------------------------------------------------
// derived checks
// ---------------------------------------------------------------------------

/// Residual of the third-order display satisfied by eta = (pi^2/12) E2:
/// |pi eta''' - 12 i (2 eta eta'' - 3 eta'^2)|.  The constant is fixed by
/// matching the leading q-coefficients of both sides.
pub fn chazy_residual(oracle: &QSeriesOracle, tau: Complex64) -> Result<f64> {
    assert_eq!(oracle.kind, QSeriesKind::EisensteinE2);
    let kappa = PI * PI / 12.0;
    let d = oracle.eval_derivs(tau, 3)?;
    let eta = kappa * d[0];
    let eta1 = kappa * d[1];
    let eta2 = kappa * d[2];
    let eta3 = kappa * d[3];
    let lhs = PI * eta3;
    let rhs = Complex64::new(0.0, 12.0) * (2.0 * eta * eta2 - 3.0 * eta1 * eta1);
    Ok((lhs - rhs).norm())
}

/// The connection sample Gamma = (pi i / 3) E2 and its transformation-law
/// residual under a group element.
pub fn gauto_residual(
    oracle: &QSeriesOracle,
    m: &MobiusMap,
    samples: &[Complex64],
) -> Result<f64> {
    assert_eq!(oracle.kind, QSeriesKind::EisensteinE2);
    let gamma = |tau: Complex64| -> Result<Complex64> {
        Ok(Complex64::new(0.0, PI / 3.0) * oracle.eval(tau)?)
    };
    let (res, _) =
        crate::connection::transform_connection_residual(&gamma, &gamma, m, samples)?;
    Ok(res)
}

/// Jets (value and first `k` derivatives) of Gamma = lambda''/lambda'.
pub fn lambda_connection_jets(
    oracle: &QSeriesOracle,
    tau: Complex64,
    k: usize,
) -> Result<Vec<Complex64>> {
    assert_eq!(oracle.kind, QSeriesKind::ModularLambda);
    let d = oracle.eval_derivs(tau, k + 2)?;
    // jets of the quotient d[2]/d[1] via truncated Taylor arithmetic
    let num: Vec<Complex64> = (0..=k).map(|j| d[j + 2] / factorial(j)).collect();
    let den: Vec<Complex64> = (0..=k).map(|j| d[j + 1] / factorial(j)).collect();
    let qt = taylor_div(&num, &den);
    Ok((0..=k).map(|j| qt[j] * factorial(j)).collect())
}

/// Jets of the base differential psi = lambda'.
pub fn lambda_psi_jets(
    oracle: &QSeriesOracle,
    tau: Complex64,
    k: usize,
) -> Result<Vec<Complex64>> {
    assert_eq!(oracle.kind, QSeriesKind::ModularLambda);
    let d = oracle.eval_derivs(tau, k + 1)?;
    Ok((0..=k).map(|j| d[j + 1]).collect())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

fn taylor_div(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= b[j] * out[k - j];
        }
        out[k] = acc / b[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e2_coefficients() {
        let o = QSeriesOracle::new(QSeriesKind::EisensteinE2, 50).unwrap();
        assert_eq!(o.coefficient_i64(0), Some(1));
        assert_eq!(o.coefficient_i64(1), Some(-24));
        assert_eq!(o.coefficient_i64(2), Some(-72));
        assert_eq!(o.coefficient_i64(3), Some(-96));
    }

    #[test]
    fn lambda_coefficients_and_special_value() {
        let o = QSeriesOracle::new(QSeriesKind::ModularLambda, 50).unwrap();
        assert_eq!(o.coefficient_i64(0), Some(0));
        assert_eq!(o.coefficient_i64(1), Some(16));
        assert_eq!(o.coefficient_i64(2), Some(-128));
        assert_eq!(o.coefficient_i64(3), Some(704));
        assert_eq!(o.coefficient_i64(4), Some(-3072));
        // lambda(i) = 1/2
        let v = o.eval(Complex64::new(0.0, 1.0)).unwrap();
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-10, "{v}");
        // periodicity lambda(tau + 2) = lambda(tau)
        let t = Complex64::new(0.37, 1.1);
        let a = o.eval(t).unwrap();
        let b = o.eval(t + 2.0).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn derivative_consistency_finite_differences() {
        let o = QSeriesOracle::new(QSeriesKind::EisensteinE2, 60).unwrap();
        let t = Complex64::new(0.2, 0.9);
        let h = 1e-5;
        let d = o.eval_derivs(t, 2).unwrap();
        let fp = o.eval(t + h).unwrap();
        let fm = o.eval(t - h).unwrap();
        let fd1 = (fp - fm) / (2.0 * h);
        assert!((fd1 - d[1]).norm() / d[1].norm() < 1e-6);
        let fd2 = (fp - 2.0 * d[0] + fm) / (h * h);
        assert!((fd2 - d[2]).norm() / d[2].norm() < 1e-5);
    }

    #[test]
    fn domain_guard() {
        let o = QSeriesOracle::new(QSeriesKind::EisensteinE2, 50).unwrap();
        assert!(matches!(
            o.eval(Complex64::new(0.0, 0.1)),
            Err(Error::OracleDomain(_))
        ));
        assert!(QSeriesOracle::new(QSeriesKind::EisensteinE2, 5).is_err());
    }

    #[test]
    fn chazy_constant_matches_leading_coefficients() {
        // pi eta''' and 12i(2 eta eta'' - 3 eta'^2) for eta = kappa E2 agree
        // at order q exactly when kappa = pi^2/12
        let kappa = PI * PI / 12.0;
        let lhs = 192.0 * kappa * PI.powi(4); // pi * kappa * |(2 pi i)^3| * 24
        let rhs = 12.0 * 2.0 * 96.0 * kappa * kappa * PI * PI;
        assert!((lhs - rhs).abs() / lhs.abs() < 1e-12);
    }

    #[test]
    fn chazy_residuals() {
        let o = QSeriesOracle::new(QSeriesKind::EisensteinE2, 50).unwrap();
        for (tau, bound) in [
            (Complex64::new(0.0, 1.0), 1e-8),
            (Complex64::new(0.0, 2.0), 1e-10),
            (Complex64::new(0.3, 0.6), 1e-6),
        ] {
            let r = chazy_residual(&o, tau).unwrap();
            assert!(r < bound, "residual {r} at {tau}");
        }
    }

    #[test]
    fn gauto_residuals() {
        let o = QSeriesOracle::new(QSeriesKind::EisensteinE2, 60).unwrap();
        let samples: Vec<Complex64> = (0..8)
            .map(|k| Complex64::new(-0.4 + 0.11 * k as f64, 0.9 + 0.1 * k as f64))
            .collect();
        // tau -> tau + 1: plain periodicity
        let t_map = MobiusMap::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let r = gauto_residual(&o, &t_map, &samples).unwrap();
        assert!(r < 1e-10, "T residual {r}");
        // tau -> -1/tau: the classical anomaly matches the inhomogeneity
        let s_map = MobiusMap::new(0.0, -1.0, 1.0, 0.0).unwrap();
        let r = gauto_residual(&o, &s_map, &samples).unwrap();
        assert!(r < 1e-8, "S residual {r}");
    }

    #[test]
    fn lambda_gamma2_connection_law() {
        // Gamma_lambda = lambda''/lambda' satisfies the law under the
        // level-two generators tau -> tau + 2 and tau -> tau/(2 tau + 1)
        let o = QSeriesOracle::new(QSeriesKind::ModularLambda, 100).unwrap();
        let gamma = |tau: Complex64| -> Result<Complex64> {
            let j = lambda_connection_jets(&o, tau, 0)?;
            Ok(j[0])
        };
        let samples: Vec<Complex64> = (0..5)
            .map(|k| Complex64::new(-0.5 + 0.05 * k as f64, 0.7 + 0.05 * k as f64))
            .collect();
        let t2 = MobiusMap::new(1.0, 2.0, 0.0, 1.0).unwrap();
        let (r, _) =
            crate::connection::transform_connection_residual(&gamma, &gamma, &t2, &samples)
                .unwrap();
        assert!(r < 1e-9, "translation residual {r}");
        let g2 = MobiusMap::new(1.0, 0.0, 2.0, 1.0).unwrap();
        let (r, _) =
            crate::connection::transform_connection_residual(&gamma, &gamma, &g2, &samples)
                .unwrap();
        assert!(r < 1e-8, "generator residual {r}");
        // adding a weight-2 form (lambda') leaves the residual small: the
        // inhomogeneous term cancels in the difference
        let eps = 0.125;
        let shifted = |tau: Complex64| -> Result<Complex64> {
            let j = lambda_connection_jets(&o, tau, 0)?;
            let p = lambda_psi_jets(&o, tau, 0)?;
            Ok(j[0] + eps * p[0])
        };
        let (r, _) =
            crate::connection::transform_connection_residual(&shifted, &shifted, &g2, &samples)
                .unwrap();
        assert!(r < 1e-8, "shifted residual {r}");
    }

    #[test]
    fn lambda_bracket_matches_potential() {
        // [lambda, tau] evaluated from jets equals Q(lambda)
        let o = QSeriesOracle::new(QSeriesKind::ModularLambda, 80).unwrap();
        let q = {
            use crate::fuchsian::*;
            use crate::rational::q_i64;
            build_orbifold_q(&OrbifoldSpec {
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
            })
            .unwrap()
        };
        let tau = Complex64::new(0.1, 1.2);
        let d = o.eval_derivs(tau, 3).unwrap();
        let bracket = d[3] / d[1].powi(3) - 1.5 * d[2] * d[2] / d[1].powi(4);
        let qv = q.rational().unwrap().eval1(d[0]).unwrap();
        assert!((bracket - qv).norm() < 1e-8, "{}", (bracket - qv).norm());
    }
}
