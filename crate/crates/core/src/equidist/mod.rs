//! Orbit distributions `Gamma_T v` against their predicted limiting densities.

mod experiment;
mod point;

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use experiment::{
    calibrate_orientation, run_experiment, Calibration, ConstantRecord, DistributionReport, ExperimentConfig,
    ReportRow, SlopeRecord,
};
pub use point::{OrbitPoint, OrbitVector, PadicPoint};

use crate::enumerate::{CongruenceWindow, GroupElement};
use crate::error::{invalid, Error, Result};
use crate::exact_arith::{ExactScalar, Prime, SymbolicReal};
use crate::linalg::binomial;
use crate::volume::fit;

/// Indicator test sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `r1 <= |w| < r2`, angle in `[theta1, theta2)`, on `R^2 \ {0}`.
    RealAnnulusSector { r1: f64, r2: f64, theta1: f64, theta2: f64 },
    /// `|w|_p = p^s` with unit part `p^s w` in `classes` modulo `p^m`
    /// (all primitive classes when `classes` is `None`).
    PadicShellBox { p: Prime, s: i64, m: u32, classes: Option<BTreeSet<[i64; 2]>> },
    /// `r1 <= |w| < r2` on `Lambda^k R^n \ {0}`.
    RealWedgeAnnulus { r1: f64, r2: f64 },
    Product { real: Box<TestFunction>, padic: Box<TestFunction> },
}

impl TestFunction {
    pub fn sector(r1: f64, r2: f64, theta1: f64, theta2: f64) -> Self {
        TestFunction::RealAnnulusSector { r1, r2, theta1, theta2 }
    }

    pub fn shell(p: Prime, s: i64) -> Self {
        TestFunction::PadicShellBox { p, s, m: 0, classes: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::RealAnnulusSector { r1, r2, theta1, theta2 } => {
                if !(*r1 > 0.0 && r1 <= r2 && r2.is_finite()) {
                    return Err(invalid(format!("sector radii need 0 < r1 <= r2, got [{r1}, {r2}]")));
                }
                if !(theta1 <= theta2 && theta2 - theta1 <= TAU + 1e-12) {
                    return Err(invalid("sector angles must lie within one full turn"));
                }
                Ok(())
            }
            TestFunction::RealWedgeAnnulus { r1, r2 } => {
                if !(*r1 > 0.0 && r1 <= r2 && r2.is_finite()) {
                    return Err(invalid(format!("annulus radii need 0 < r1 <= r2, got [{r1}, {r2}]")));
                }
                Ok(())
            }
            TestFunction::PadicShellBox { p, m, classes, .. } => {
                let Some(cl) = classes else { return Ok(()) };
                if cl.is_empty() || *m == 0 {
                    return Err(invalid("congruence classes need m >= 1 and a nonempty list"));
                }
                let q = p.pow_i128(*m).filter(|&q| q < 1 << 40).ok_or_else(|| invalid("modulus too large"))? as i64;
                let pi = p.as_i64();
                for c in cl {
                    if c.iter().any(|&x| !(0..q).contains(&x)) || c.iter().all(|&x| x % pi == 0) {
                        return Err(invalid(format!("class {c:?} is not a primitive residue pair mod {q}")));
                    }
                }
                Ok(())
            }
            TestFunction::Product { real, padic } => {
                if !matches!(**real, TestFunction::RealAnnulusSector { .. })
                    || !matches!(**padic, TestFunction::PadicShellBox { .. })
                {
                    return Err(invalid("a product pairs a real sector with a p-adic shell box"));
                }
                real.validate()?;
                padic.validate()
            }
        }
    }

    /// Indicator value at an orbit point.
    pub fn contains(&self, w: &OrbitPoint) -> bool {
        match self {
            TestFunction::RealAnnulusSector { r1, r2, theta1, theta2 } => {
                if w.real.len() != 2 {
                    return false;
                }
                let r = w.real[0].hypot(w.real[1]);
                if !(r >= *r1 && r < *r2) {
                    return false;
                }
                let d = (w.real[1].atan2(w.real[0]) - theta1).rem_euclid(TAU);
                d < theta2 - theta1
            }
            TestFunction::RealWedgeAnnulus { r1, r2 } => {
                let r = w.real.iter().map(|x| x * x).sum::<f64>().sqrt();
                r >= *r1 && r < *r2
            }
            TestFunction::PadicShellBox { p, s, m, classes } => match &w.padic {
                Some(pt) if pt.p == *p && pt.abs_exp == *s => match classes {
                    None => true,
                    Some(cl) => pt.unit_mod(*m).is_some_and(|u| cl.contains(&u)),
                },
                _ => false,
            },
            TestFunction::Product { real, padic } => real.contains(w) && padic.contains(w),
        }
    }

    fn prime(&self) -> Option<Prime> {
        match self {
            TestFunction::PadicShellBox { p, .. } => Some(*p),
            TestFunction::Product { padic, .. } => padic.prime(),
            _ => None,
        }
    }

    /// Largest real coordinate size and p-adic exponent a point can have.
    pub(crate) fn reach(&self) -> (Option<f64>, Option<i64>) {
        match self {
            TestFunction::RealAnnulusSector { r2, .. } | TestFunction::RealWedgeAnnulus { r2, .. } => (Some(*r2), None),
            TestFunction::PadicShellBox { s, .. } => (None, Some(*s)),
            TestFunction::Product { real, padic } => (real.reach().0, padic.reach().1),
        }
    }
}

/// `int f(w) dw/|w|` over `R^2` for a sector indicator.
pub fn predicted_integral_r2(f: &TestFunction) -> Result<f64> {
    f.validate()?;
    match f {
        TestFunction::RealAnnulusSector { r1, r2, theta1, theta2 } => Ok((theta2 - theta1) * (r2 - r1)),
        _ => Err(invalid("predicted_integral_r2 needs a real annulus sector")),
    }
}

/// `int f(w) dw/|w|_p` over `Q_p^2`, with `Z_p^2` of mass 1.
pub fn predicted_integral_qp2(f: &TestFunction) -> Result<ExactScalar> {
    f.validate()?;
    match f {
        TestFunction::PadicShellBox { p, s, m, classes } => {
            let shell = ExactScalar::prime_power(*p, *s) * (ExactScalar::one() - ExactScalar::prime_power(*p, -2));
            Ok(match classes {
                None => shell,
                Some(cl) => {
                    let primitive = ExactScalar::prime_power(*p, 2 * *m as i64)
                        - ExactScalar::prime_power(*p, 2 * *m as i64 - 2);
                    shell * ExactScalar::from_int(cl.len() as i64) / primitive
                }
            })
        }
        _ => Err(invalid("predicted_integral_qp2 needs a p-adic shell box")),
    }
}

/// Predicted mass of any test set; wedge annuli use the radial density
/// `r^(a-1) dr` with `a = wedge_exponent`.
pub fn predicted_integral(f: &TestFunction, wedge_exponent: f64) -> Result<f64> {
    match f {
        TestFunction::RealAnnulusSector { .. } => predicted_integral_r2(f),
        TestFunction::PadicShellBox { .. } => Ok(predicted_integral_qp2(f)?.to_f64()),
        TestFunction::RealWedgeAnnulus { r1, r2 } => {
            f.validate()?;
            Ok(if wedge_exponent == 0.0 {
                (r2 / r1).ln()
            } else {
                (r2.powf(wedge_exponent) - r1.powf(wedge_exponent)) / wedge_exponent
            })
        }
        TestFunction::Product { real, padic } => {
            f.validate()?;
            Ok(predicted_integral_r2(real)? * predicted_integral_qp2(padic)?.to_f64())
        }
    }
}

/// Group and action an orbit experiment runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Application {
    /// `SL(2, Z)` acting on `R^2`.
    Ledrappier,
    /// `SL(2, Z[1/p])` restricted to a congruence window at `p`, acting on `R^2`.
    Windowed { p: Prime },
    /// `SL(2, Z[1/p])` acting on `R^2 x Q_p^2`.
    PadicProduct { p: Prime },
    /// `SL(n, Z)` acting on `Lambda^k R^n`.
    Wedge { n: usize, k: usize },
}

impl Application {
    pub fn prime(&self) -> Option<Prime> {
        match self {
            Application::Windowed { p } | Application::PadicProduct { p } => Some(*p),
            _ => None,
        }
    }

    /// Dimension of the vectors acted on.
    pub fn vector_dim(&self) -> usize {
        match self {
            Application::Wedge { n, k } => binomial(*n, *k),
            _ => 2,
        }
    }
}

impl fmt::Display for Application {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Application::Ledrappier => write!(f, "ledrappier"),
            Application::Windowed { p } => write!(f, "window(p={p})"),
            Application::PadicProduct { p } => write!(f, "padic_product(p={p})"),
            Application::Wedge { n, k } => write!(f, "wedge(n={n},k={k})"),
        }
    }
}

/// `n^2 + k^2 - nk - n`.
pub fn wedge_normalizer_exponent(n: usize, k: usize) -> i64 {
    let (n, k) = (n as i64, k as i64);
    n * n + k * k - n * k - n
}

/// Normalizer of the orbit sum at radius `t`.
pub fn normalizer(app: &Application, t: f64, lambda_prime: Option<Prime>) -> f64 {
    let padic_scale = |p: Prime| t * (p.get() as f64).powi(fit::floor_log_f64(p, t) as i32);
    match app {
        Application::Ledrappier | Application::Windowed { .. } => t,
        Application::PadicProduct { p } => padic_scale(*p),
        Application::Wedge { n, k } => {
            let base = lambda_prime.map_or(t, padic_scale);
            base.powi(wedge_normalizer_exponent(*n, *k) as i32)
        }
    }
}

/// Constant-free targets for one application.
#[derive(Clone, Debug, Serialize)]
pub struct PredictionRecord {
    pub normalizer: String,
    /// Predicted mass of each test set, up to one global constant.
    pub predicted: Vec<(String, f64)>,
    /// `predicted[i] / predicted[0]`.
    pub ratios: Vec<(String, f64)>,
    /// Mass of the congruence window relative to `SL(2, Z_p)`.
    pub window_scale: Option<ExactScalar>,
}

pub fn predicted_limit(
    app: &Application,
    tests: &[(String, TestFunction)],
    window: Option<&CongruenceWindow>,
    wedge_exponent: f64,
) -> Result<PredictionRecord> {
    let normalizer = match app {
        Application::Ledrappier | Application::Windowed { .. } => "T".to_string(),
        Application::PadicProduct { p } => format!("T*{p}^E(log_{p} T)"),
        Application::Wedge { n, k } => format!("T^{}", wedge_normalizer_exponent(*n, *k)),
    };
    let mut predicted = Vec::with_capacity(tests.len());
    for (id, f) in tests {
        let ok = match (app, f) {
            (Application::Wedge { .. }, TestFunction::RealWedgeAnnulus { .. }) => true,
            (Application::PadicProduct { p }, TestFunction::Product { .. } | TestFunction::PadicShellBox { .. }) => {
                f.prime() == Some(*p)
            }
            (Application::Ledrappier | Application::Windowed { .. } | Application::PadicProduct { .. }, TestFunction::RealAnnulusSector { .. }) => true,
            _ => false,
        };
        if !ok {
            return Err(invalid(format!("test set {id:?} does not fit application {app}")));
        }
        predicted.push((id.clone(), predicted_integral(f, wedge_exponent)?));
    }
    let ratios = match predicted.first() {
        Some((_, base)) if *base > 0.0 => predicted.iter().map(|(id, x)| (id.clone(), x / base)).collect(),
        Some(_) => return Err(invalid("the reference test set has zero predicted mass")),
        None => Vec::new(),
    };
    let window_scale = match (app, window) {
        (Application::Windowed { p }, Some(w)) => {
            if w.prime() != *p || w.dim() != 2 {
                return Err(invalid("window must be for SL(2) at the application prime"));
            }
            Some(w.mass())
        }
        (Application::Windowed { .. }, None) => return Err(invalid("window application needs a window")),
        _ => None,
    };
    Ok(PredictionRecord { normalizer, predicted, ratios, window_scale })
}

/// `(1/normalizer) * sum f(gamma v)` over a ball sequence.
pub fn orbit_sum(
    ball: &[GroupElement],
    p: Option<Prime>,
    v: &OrbitVector,
    f: &TestFunction,
    normalizer: f64,
) -> Result<f64> {
    if !(normalizer > 0.0) {
        return Err(invalid("normalizer must be positive"));
    }
    f.validate()?;
    let mut hits = 0u64;
    for g in ball {
        if !v.fits(g) {
            return Err(invalid("vector dimension does not match the group elements"));
        }
        if f.contains(&v.act(g, p)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / normalizer)
}

/// Least-squares slope of `log value` against `log T` and its standard error.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 5 {
        return Err(Error::DegenerateSpan(format!("need at least 5 points, got {}", points.len())));
    }
    if points.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0)) {
        return Err(invalid("slope fit needs positive T and values"));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < 8.0 * lo {
        return Err(Error::DegenerateSpan(format!("T spans a factor {:.3}, need 8", hi / lo)));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let (a, b) = fit::least_squares(&pts).ok_or_else(|| Error::DegenerateSpan("no spread in T".into()))?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let ssr: f64 = pts.iter().map(|&(x, y)| (y - a - b * x).powi(2)).sum();
    Ok((b, (ssr / (n - 2.0) / sxx).sqrt()))
}

/// Whether `x` is rational, decided exactly for surds and by continued
/// fraction termination within `depth` terms for floats.
fn looks_rational(x: &SymbolicReal, depth: usize) -> bool {
    if x.as_rational().is_some() {
        return true;
    }
    x.continued_fraction(depth, 1e-12).1
}

/// Ratio `a / b`, exact when both lie in one quadratic field.
fn real_ratio(a: &SymbolicReal, b: &SymbolicReal) -> SymbolicReal {
    a.exact_div(b).unwrap_or_else(|| SymbolicReal::Float(a.to_f64() / b.to_f64()))
}

/// Whether the line through `v` contains a nonzero rational vector.
pub fn has_rational_direction(v: &[SymbolicReal], depth: usize) -> bool {
    let Some(pivot) = v.iter().find(|x| x.signum() != 0) else { return true };
    v.iter().all(|x| x.signum() == 0 || looks_rational(&real_ratio(x, pivot), depth))
}

/// Violated density hypotheses, as human-readable flags.
pub fn check_hypotheses(
    app: &Application,
    v_real: &[SymbolicReal],
    v_padic: Option<&[ExactScalar]>,
    depth: usize,
) -> Vec<String> {
    let mut flags = Vec::new();
    match app {
        Application::Ledrappier | Application::Windowed { .. } | Application::Wedge { .. } => {
            if has_rational_direction(v_real, depth) {
                flags.push("density hypothesis violated: v spans a rational line".to_string());
            }
        }
        Application::PadicProduct { .. } => {
            if let Some(vp) = v_padic {
                if has_rational_direction(v_real, depth) && v_real.len() == 2 && vp.len() == 2 {
                    // Both rational multiples of one rational vector?
                    let cross = SymbolicReal::rational(vp[1].clone());
                    let lhs = real_ratio(&v_real[1], &v_real[0]);
                    let parallel = if v_real[0].signum() == 0 {
                        vp[0].is_zero()
                    } else if vp[0].is_zero() {
                        false
                    } else {
                        let rhs = real_ratio(&cross, &SymbolicReal::rational(vp[0].clone()));
                        match (lhs.as_rational(), rhs.as_rational()) {
                            (Some(a), Some(b)) => a == b,
                            _ => (lhs.to_f64() - rhs.to_f64()).abs() < 1e-12,
                        }
                    };
                    if parallel {
                        flags.push("density hypothesis violated: v_inf and v_p span one rational line".to_string());
                    }
                }
            }
        }
    }
    flags
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `sector:r1:r2:theta1:theta2` (angles in units of pi), `shell:p:s`,
    /// `shell:p:s:m:a/b,c/d,...`, `wedge:r1:r2`, or `A*B` for a product.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((a, b)) = s.split_once('*') {
            return Ok(TestFunction::Product { real: Box::new(a.parse()?), padic: Box::new(b.parse()?) });
        }
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {x:?} in {s:?}")));
        let int = |x: &str| x.parse::<i64>().map_err(|_| Error::Parse(format!("bad integer {x:?} in {s:?}")));
        let f = match parts.as_slice() {
            ["sector", r1, r2, t1, t2] => TestFunction::RealAnnulusSector {
                r1: num(r1)?,
                r2: num(r2)?,
                theta1: num(t1)? * std::f64::consts::PI,
                theta2: num(t2)? * std::f64::consts::PI,
            },
            ["wedge", r1, r2] => TestFunction::RealWedgeAnnulus { r1: num(r1)?, r2: num(r2)? },
            ["shell", p, sv] => TestFunction::shell(Prime::new(int(p)? as u64)?, int(sv)?),
            ["shell", p, sv, m, list] => {
                let mut classes = BTreeSet::new();
                for item in list.split(',') {
                    let (a, b) = item
                        .split_once('/')
                        .ok_or_else(|| Error::Parse(format!("bad class {item:?} in {s:?}")))?;
                    classes.insert([int(a)?, int(b)?]);
                }
                TestFunction::PadicShellBox {
                    p: Prime::new(int(p)? as u64)?,
                    s: int(sv)?,
                    m: int(m)? as u32,
                    classes: Some(classes),
                }
            }
            _ => return Err(Error::Parse(format!("unknown test function {s:?}"))),
        };
        f.validate()?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{Ball, BallSpec};
    use crate::linalg::{NormKind, Radius};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn sector_predictions() {
        assert!((predicted_integral_r2(&TestFunction::sector(1.0, 2.0, 0.0, TAU)).unwrap() - TAU).abs() < 1e-15);
        assert!((predicted_integral_r2(&TestFunction::sector(1.0, 3.0, 0.0, PI)).unwrap() - TAU).abs() < 1e-15);
        assert_eq!(predicted_integral_r2(&TestFunction::sector(2.0, 2.0, 0.0, PI)).unwrap(), 0.0);
        assert!(TestFunction::sector(0.0, 1.0, 0.0, 1.0).validate().is_err());
        assert!(TestFunction::sector(1.0, 2.0, 0.0, 7.0).validate().is_err());
    }

    #[test]
    fn shell_predictions() {
        let p = pr(3);
        let one_minus = ExactScalar::new(8, 9).unwrap();
        assert_eq!(predicted_integral_qp2(&TestFunction::shell(p, 0)).unwrap(), one_minus);
        assert_eq!(predicted_integral_qp2(&TestFunction::shell(p, 2)).unwrap(), &one_minus * &ExactScalar::from_int(9));
        // Half of the 8 primitive classes mod 3.
        let half: BTreeSet<[i64; 2]> = [[0, 1], [0, 2], [1, 0], [2, 0]].into_iter().collect();
        let f = TestFunction::PadicShellBox { p, s: 1, m: 1, classes: Some(half) };
        assert_eq!(predicted_integral_qp2(&f).unwrap(), &one_minus * &ExactScalar::new(3, 2).unwrap());
        let bad: BTreeSet<[i64; 2]> = [[0, 0]].into_iter().collect();
        assert!(TestFunction::PadicShellBox { p, s: 0, m: 1, classes: Some(bad) }.validate().is_err());
    }

    #[test]
    fn prediction_records() {
        let tests = vec![
            ("a".to_string(), TestFunction::sector(1.0, 2.0, 0.0, TAU)),
            ("b".to_string(), TestFunction::sector(1.0, 3.0, 0.0, TAU)),
        ];
        let rec = predicted_limit(&Application::Ledrappier, &tests, None, 1.0).unwrap();
        assert!((rec.ratios[1].1 - 2.0).abs() < 1e-15);
        let w = CongruenceWindow::principal(pr(2), 1, 2).unwrap();
        let rec = predicted_limit(&Application::Windowed { p: pr(2) }, &tests, Some(&w), 1.0).unwrap();
        assert_eq!(rec.window_scale.unwrap(), ExactScalar::new(1, 6).unwrap());
        assert_eq!(wedge_normalizer_exponent(3, 1), 4);
        assert_eq!(wedge_normalizer_exponent(2, 1), 1);
        assert!(predicted_limit(&Application::Wedge { n: 3, k: 1 }, &tests, None, 1.0).is_err());
    }

    #[test]
    fn normalizers() {
        let p = pr(2);
        assert_eq!(normalizer(&Application::Ledrappier, 10.0, None), 10.0);
        assert_eq!(normalizer(&Application::PadicProduct { p }, 10.0, None), 80.0);
        assert_eq!(normalizer(&Application::PadicProduct { p }, 16.0, None), 256.0);
        assert_eq!(normalizer(&Application::Wedge { n: 3, k: 1 }, 2.0, None), 16.0);
        assert_eq!(normalizer(&Application::Wedge { n: 3, k: 1 }, 3.0, Some(p)), 6f64.powi(4));
    }

    #[test]
    fn slope_fits() {
        let cube: Vec<(f64, f64)> = (0..6).map(|i| 2f64.powi(i)).map(|t| (t, t.powi(3))).collect();
        let (s, e) = slope_fit(&cube).unwrap();
        assert!((s - 3.0).abs() < 1e-12 && e < 1e-12);
        let noisy: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .zip([1.01, 0.99, 1.0, 1.01, 0.99, 1.0])
            .map(|(&t, n)| (t, 5.0 * t * t * n))
            .collect();
        assert!((slope_fit(&noisy).unwrap().0 - 2.0).abs() < 0.05);
        assert!(matches!(slope_fit(&cube[..4]), Err(Error::DegenerateSpan(_))));
        let narrow: Vec<(f64, f64)> = (0..6).map(|i| (1.0 + i as f64, 1.0)).collect();
        assert!(matches!(slope_fit(&narrow), Err(Error::DegenerateSpan(_))));
    }

    #[test]
    fn sl2z_counts_grow_quadratically() {
        let pts: Vec<(f64, f64)> = [8i64, 16, 32, 64, 128]
            .iter()
            .map(|&t| {
                let ball = Ball::new(BallSpec::sl2z(Radius::from_int(t).unwrap(), NormKind::Frobenius)).unwrap();
                (t as f64, ball.count() as f64)
            })
            .collect();
        assert!((slope_fit(&pts).unwrap().0 - 2.0).abs() < 0.1);
    }

    #[test]
    fn hypotheses() {
        let s2 = SymbolicReal::sqrt(2).unwrap();
        let one = SymbolicReal::rational(ExactScalar::one());
        let three = SymbolicReal::rational(ExactScalar::from_int(3));
        assert!(check_hypotheses(&Application::Ledrappier, &[one.clone(), s2.clone()], None, 30).is_empty());
        assert_eq!(check_hypotheses(&Application::Ledrappier, &[one.clone(), three.clone()], None, 30).len(), 1);
        assert_eq!(check_hypotheses(&Application::Ledrappier, &[one.clone(), SymbolicReal::Float(0.25)], None, 30).len(), 1);
        let p = Application::PadicProduct { p: pr(2) };
        let vp = [ExactScalar::one(), ExactScalar::from_int(3)];
        assert!(check_hypotheses(&p, &[one.clone(), s2], Some(&vp), 30).is_empty());
        assert!(check_hypotheses(&p, &[one.clone(), SymbolicReal::rational(ExactScalar::from_int(5))], Some(&vp), 30).is_empty());
        assert_eq!(check_hypotheses(&p, &[one, three], Some(&vp), 30).len(), 1);
        let lam = Application::Wedge { n: 3, k: 1 };
        let w: Vec<SymbolicReal> = ["1", "sqrt(2)", "sqrt(3)"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(has_rational_direction(&w[..1], 30));
        assert!(check_hypotheses(&lam, &w, None, 30).is_empty());
    }

    #[test]
    fn parse_test_functions() {
        let f: TestFunction = "sector:1:2:0:2".parse().unwrap();
        assert_eq!(f, TestFunction::sector(1.0, 2.0, 0.0, TAU));
        let g: TestFunction = "sector:1:2:0:1*shell:2:0:1:1/0,0/1".parse().unwrap();
        assert!(matches!(g, TestFunction::Product { .. }));
        assert!("shell:2:0:1:0/0".parse::<TestFunction>().is_err());
        assert!("disk:1".parse::<TestFunction>().is_err());
    }

    #[test]
    fn orbit_sum_trivial_cases() {
        let ball = Ball::new(BallSpec::sl2z(Radius::from_int(3).unwrap(), NormKind::Frobenius)).unwrap().collect();
        let v = OrbitVector::real(&["1".parse().unwrap(), "sqrt(2)".parse().unwrap()]);
        let far = TestFunction::sector(100.0, 200.0, 0.0, TAU);
        assert_eq!(orbit_sum(&ball, None, &v, &far, 1.0).unwrap(), 0.0);
        let everything = TestFunction::sector(1e-9, 1e9, 0.0, TAU);
        assert_eq!(orbit_sum(&ball, None, &v, &everything, 1.0).unwrap(), ball.len() as f64);
        assert!(orbit_sum(&ball, None, &v, &far, 0.0).is_err());
    }

    fn sectors() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.2f64..3.0, 0.0f64..3.0, -PI..PI, 0.0f64..TAU)
            .prop_map(|(r1, dr, t1, dt)| (r1, r1 + dr, t1, t1 + dt))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn indicator_additivity((r1, r2, t1, t2) in sectors(), split in 0.0f64..1.0, a in -20i64..20, b in -20i64..20) {
            let mid = t1 + split * (t2 - t1);
            let whole = TestFunction::sector(r1, r2, t1, t2);
            let left = TestFunction::sector(r1, r2, t1, mid);
            let right = TestFunction::sector(r1, r2, mid, t2);
            let w = OrbitPoint { real: vec![a as f64 / 7.0, b as f64 / 5.0], padic: None };
            prop_assert_eq!(whole.contains(&w) as u8, left.contains(&w) as u8 + right.contains(&w) as u8);
            let sum = predicted_integral_r2(&left).unwrap() + predicted_integral_r2(&right).unwrap();
            prop_assert!((predicted_integral_r2(&whole).unwrap() - sum).abs() < 1e-12);
        }

        #[test]
        fn predictions_rotate_and_scale((r1, r2, t1, t2) in sectors(), rho in -PI..PI, lambda in 0.1f64..10.0) {
            let base = predicted_integral_r2(&TestFunction::sector(r1, r2, t1, t2)).unwrap();
            let rotated = predicted_integral_r2(&TestFunction::sector(r1, r2, t1 + rho, t2 + rho)).unwrap();
            prop_assert!((base - rotated).abs() <= 1e-12 * base.max(1.0));
            let scaled = predicted_integral_r2(&TestFunction::sector(lambda * r1, lambda * r2, t1, t2)).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 1e-12 * scaled.max(1.0));
        }

        #[test]
        fn products_factor((r1, r2, t1, t2) in sectors(), s in -3i64..3) {
            let p = pr(2);
            let real = TestFunction::sector(r1, r2, t1, t2);
            let padic = TestFunction::shell(p, s);
            let prod = TestFunction::Product { real: Box::new(real.clone()), padic: Box::new(padic.clone()) };
            let expect = predicted_integral_r2(&real).unwrap() * predicted_integral_qp2(&padic).unwrap().to_f64();
            prop_assert_eq!(predicted_integral(&prod, 1.0).unwrap(), expect);
        }

        #[test]
        fn shell_classes_add_up(s in -2i64..3, mask in 1u32..255) {
            let p = pr(3);
            let all: Vec<[i64; 2]> = (0..3).flat_map(|a| (0..3).map(move |b| [a, b])).filter(|c| c != &[0, 0]).collect();
            let pick: BTreeSet<[i64; 2]> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| *c).collect();
            let rest: BTreeSet<[i64; 2]> = all.iter().filter(|c| !pick.contains(*c)).copied().collect();
            let total = predicted_integral_qp2(&TestFunction::shell(p, s)).unwrap();
            let a = predicted_integral_qp2(&TestFunction::PadicShellBox { p, s, m: 1, classes: Some(pick) }).unwrap();
            let b = if rest.is_empty() {
                ExactScalar::zero()
            } else {
                predicted_integral_qp2(&TestFunction::PadicShellBox { p, s, m: 1, classes: Some(rest) }).unwrap()
            };
            prop_assert_eq!(a + b, total);
        }
    }
}
