use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exact_arith::Prime;

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Prime whose `E(log_p t)` defines the residue classes; `None` fits a
    /// single class.
    pub prime: Option<Prime>,
    /// Candidate moduli, tried in increasing order.
    pub moduli: Vec<u32>,
    /// Largest accepted absolute residual in `log vol`.
    pub tolerance: f64,
    pub min_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { prime: None, moduli: vec![1, 2, 3, 4], tolerance: 1e-6, min_samples: 8 }
    }
}

/// `vol ~ c t^d (log t)^e` on one residue class.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClassFit {
    Empty,
    Fitted { c: f64, d: f64, d_rational: Option<String>, e: u8, residual: f64, samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusTrial {
    pub modulus: u32,
    /// Worst class residual; infinite when a class had too few samples.
    pub max_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub modulus: u32,
    pub classes: Vec<ClassFit>,
    pub trials: Vec<ModulusTrial>,
}

/// `E(log_p t)`, treating `t` within a relative `1e-9` of a power of `p` as
/// that power.
pub fn floor_log_f64(p: Prime, t: f64) -> i64 {
    let x = t.ln() / (p.get() as f64).ln();
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// Fit per-class power laws to `(t, vol)` samples and pick the smallest
/// modulus whose classes all fit within tolerance.
pub fn fit_asymptotics(samples: &[(f64, f64)], opts: &FitOptions) -> Result<AsymptoticProfile> {
    if samples.iter().any(|&(t, v)| !(t > 1.0) || !(v > 0.0) || !t.is_finite() || !v.is_finite()) {
        return Err(invalid("samples need t > 1 and positive finite volumes"));
    }
    let mut moduli = if opts.prime.is_some() { opts.moduli.clone() } else { vec![1] };
    moduli.sort_unstable();
    moduli.dedup();
    if moduli.first() == Some(&0) || moduli.is_empty() {
        return Err(invalid("moduli must be positive"));
    }
    let mut trials = Vec::new();
    for &modulus in &moduli {
        let mut buckets = vec![Vec::new(); modulus as usize];
        for &(t, v) in samples {
            let j = opts.prime.map_or(0, |p| floor_log_f64(p, t).rem_euclid(modulus as i64)) as usize;
            buckets[j].push((t, v));
        }
        if buckets.iter().any(|b| !b.is_empty() && b.len() < opts.min_samples) {
            trials.push(ModulusTrial { modulus, max_residual: f64::INFINITY, passed: false });
            continue;
        }
        let classes: Vec<ClassFit> = buckets.iter().map(|b| fit_class(b, opts.tolerance)).collect();
        let worst = classes
            .iter()
            .map(|c| match c {
                ClassFit::Empty => 0.0,
                ClassFit::Fitted { residual, .. } => *residual,
            })
            .fold(0.0, f64::max);
        let passed = worst <= opts.tolerance && classes.iter().any(|c| *c != ClassFit::Empty);
        trials.push(ModulusTrial { modulus, max_residual: worst, passed });
        if passed {
            return Ok(AsymptoticProfile { modulus, classes, trials });
        }
    }
    let summary: Vec<String> =
        trials.iter().map(|t| format!("N={} residual={:.3e}", t.modulus, t.max_residual)).collect();
    Err(Error::FitFailure(format!("no modulus fits within tolerance: {}", summary.join(", "))))
}

fn fit_class(samples: &[(f64, f64)], tol: f64) -> ClassFit {
    if samples.is_empty() {
        return ClassFit::Empty;
    }
    let mut best: Option<(f64, f64, u8, f64)> = None;
    for e in 0..=2u8 {
        if e > 0 && samples.iter().any(|&(t, _)| t <= std::f64::consts::E) {
            continue;
        }
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(t, v)| (t.ln(), v.ln() - e as f64 * t.ln().ln()))
            .collect();
        let Some((a, d)) = least_squares(&pts) else { continue };
        let residual = pts.iter().map(|&(x, y)| (y - a - d * x).abs()).fold(0.0, f64::max);
        let better = match best {
            None => true,
            Some((.., r)) => r > tol && residual < r,
        };
        if better {
            best = Some((a, d, e, residual));
        }
    }
    match best {
        None => ClassFit::Fitted { c: f64::NAN, d: f64::NAN, d_rational: None, e: 0, residual: f64::INFINITY, samples: samples.len() },
        Some((a, d, e, residual)) => ClassFit::Fitted {
            c: a.exp(),
            d,
            d_rational: small_fraction(d, 12, 1e-6),
            e,
            residual,
            samples: samples.len(),
        },
    }
}

/// Intercept and slope of the least-squares line; `None` without spread in x.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

fn small_fraction(x: f64, max_den: i64, tol: f64) -> Option<String> {
    (1..=max_den).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then(|| if q == 1 { format!("{p}") } else { format!("{p}/{q}") })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn fitted(c: &ClassFit) -> (f64, f64, u8) {
        match c {
            ClassFit::Fitted { c, d, e, .. } => (*c, *d, *e),
            ClassFit::Empty => panic!("empty class"),
        }
    }

    #[test]
    fn pure_power_law() {
        let samples: Vec<(f64, f64)> = (1..=12).map(|k| (2f64.powi(k), 3.0 * 2f64.powi(k).powf(1.5))).collect();
        let prof = fit_asymptotics(&samples, &FitOptions::default()).unwrap();
        assert_eq!(prof.modulus, 1);
        let (c, d, e) = fitted(&prof.classes[0]);
        assert!((c - 3.0).abs() < 1e-9 && (d - 1.5).abs() < 1e-12 && e == 0);
        assert!(matches!(&prof.classes[0], ClassFit::Fitted { d_rational: Some(s), .. } if s == "3/2"));
    }

    #[test]
    fn log_factor_is_detected() {
        let samples: Vec<(f64, f64)> =
            (2..=14).map(|k| (3f64.powi(k), 2.0 * 3f64.powi(k) * 3f64.powi(k).ln())).collect();
        let prof = fit_asymptotics(&samples, &FitOptions::default()).unwrap();
        let (c, d, e) = fitted(&prof.classes[0]);
        assert_eq!(e, 1);
        assert!((c - 2.0).abs() < 1e-6 && (d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parity_classes_need_modulus_two() {
        let p = pr(3);
        let samples: Vec<(f64, f64)> = (1..=24)
            .map(|n| {
                let t = 3f64.powi(n);
                (t, t.sqrt() * 3f64.powi(n / 2))
            })
            .collect();
        let prof = fit_asymptotics(&samples, &FitOptions { prime: Some(p), ..FitOptions::default() }).unwrap();
        assert_eq!(prof.modulus, 2);
        assert!(!prof.trials[0].passed && prof.trials[0].modulus == 1);
        let (c0, d0, _) = fitted(&prof.classes[0]);
        let (c1, d1, _) = fitted(&prof.classes[1]);
        assert!((d0 - 1.0).abs() < 1e-9 && (d1 - 1.0).abs() < 1e-9);
        assert!((c0 - 1.0).abs() < 1e-9 && (c1 * 3f64.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classes_without_samples_are_empty() {
        let p = pr(2);
        let samples: Vec<(f64, f64)> = (1..=10).map(|k| 2f64.powi(2 * k)).map(|t| (t, t)).collect();
        let prof =
            fit_asymptotics(&samples, &FitOptions { prime: Some(p), moduli: vec![2], ..FitOptions::default() })
                .unwrap();
        assert_eq!(prof.classes[1], ClassFit::Empty);
    }

    #[test]
    fn failures() {
        let few: Vec<(f64, f64)> = (1..=5).map(|k| (2f64.powi(k), 1.0)).collect();
        assert!(matches!(fit_asymptotics(&few, &FitOptions::default()), Err(Error::FitFailure(_))));
        assert!(fit_asymptotics(&[(0.5, 1.0)], &FitOptions::default()).is_err());
        let noisy: Vec<(f64, f64)> = (1..=20).map(|k| (2f64.powi(k), if k % 3 == 0 { 2.0 } else { 1.0 })).collect();
        assert!(fit_asymptotics(&noisy, &FitOptions::default()).is_err());
    }

    #[test]
    fn floor_log_is_robust_at_powers() {
        let p = pr(3);
        for n in 1..=40 {
            assert_eq!(floor_log_f64(p, 3f64.powi(n)), n as i64);
            assert_eq!(floor_log_f64(p, 3f64.powi(n) * 0.9), n as i64 - 1);
        }
    }

    proptest! {
        #[test]
        fn rescaling_volumes_rescales_c(lambda in 0.01f64..100.0, d in 0.0f64..4.0) {
            let samples: Vec<(f64, f64)> = (1..=10).map(|k| (2f64.powi(k), 2f64.powi(k).powf(d))).collect();
            let scaled: Vec<(f64, f64)> = samples.iter().map(|&(t, v)| (t, lambda * v)).collect();
            let a = fit_asymptotics(&samples, &FitOptions::default()).unwrap();
            let b = fit_asymptotics(&scaled, &FitOptions::default()).unwrap();
            let (ca, da, _) = fitted(&a.classes[0]);
            let (cb, db, _) = fitted(&b.classes[0]);
            prop_assert!((cb / ca / lambda - 1.0).abs() < 1e-8);
            prop_assert!((da - db).abs() < 1e-9);
        }
    }
}
