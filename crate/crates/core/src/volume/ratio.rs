use serde::Serialize;

use super::{stab_ratio_closed_form, translated_ratio, GroupDescriptor, Orientation};
use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Place};
use crate::linalg::{matrix_norm, Matrix, NormKind, PlacedMatrix, Radius};

/// Radius ladder `t0 * lambda^k`, `k < steps`, where `lambda` is 2 for purely
/// real groups and `p` otherwise.
#[derive(Clone, Debug)]
pub struct LadderOptions {
    pub t0: f64,
    pub steps: usize,
    pub tol: f64,
    pub max_modulus: u32,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions { t0: 4.0, steps: 22, tol: 1e-4, max_modulus: 4 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassLimit {
    pub residue: u32,
    pub limit: f64,
    pub converged: bool,
    pub estimates: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioLimit {
    /// Number of residue classes of `k` the ladder was split into.
    pub modulus: u32,
    pub classes: Vec<ClassLimit>,
    pub converged: bool,
    pub closed_form: Option<f64>,
}

/// Limit of `vol H_t(g) / vol H_t` along a geometric ladder, with Richardson
/// extrapolation assuming an `O(t^-2)` error.
///
/// When the ratios do not settle, the ladder is split by `k mod N` for
/// `N = 2, ..., max_modulus` and each class extrapolated separately. The
/// result is marked unconverged when no modulus works.
pub fn skew_ball_ratio_limit(
    group: &GroupDescriptor,
    g: &PlacedMatrix,
    orientation: Orientation,
    opts: &LadderOptions,
) -> Result<RatioLimit> {
    if !(opts.t0 > 0.0) || opts.steps < 4 || opts.max_modulus == 0 {
        return Err(invalid("ladder needs t0 > 0, at least 4 steps and a positive modulus bound"));
    }
    let lambda = group.prime().map_or(2, |p| p.get());
    let t0 = ExactScalar::from_f64(opts.t0)?;
    let mut ratios = Vec::with_capacity(opts.steps);
    let mut t = t0;
    for _ in 0..opts.steps {
        ratios.push(translated_ratio(group, g, orientation, &Radius::new(t.clone())?)?.to_f64());
        t *= ExactScalar::from_int(lambda);
    }
    let max_modulus = if group.prime().is_some() { opts.max_modulus } else { 1 };
    let closed_form = closed_form(group, g, orientation)?;
    let mut last = None;
    for modulus in 1..=max_modulus {
        let factor = (lambda as f64).powi(2 * modulus as i32);
        let classes: Vec<ClassLimit> = (0..modulus)
            .map(|j| {
                let seq: Vec<f64> = ratios.iter().skip(j as usize).step_by(modulus as usize).copied().collect();
                extrapolate(j, &seq, factor, opts.tol)
            })
            .collect();
        let converged = classes.iter().all(|c| c.converged);
        let result = RatioLimit { modulus, classes, converged, closed_form };
        if converged {
            return Ok(result);
        }
        last = Some(result);
    }
    Ok(last.expect("at least one modulus"))
}

fn extrapolate(residue: u32, seq: &[f64], factor: f64, tol: f64) -> ClassLimit {
    let estimates: Vec<f64> = seq.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
    let tail = &estimates[estimates.len().saturating_sub(3)..];
    let limit = *estimates.last().unwrap_or(&f64::NAN);
    let converged = tail.len() == 3
        && tail.iter().all(|x| x.is_finite())
        && tail.iter().all(|x| (x - limit).abs() <= tol * limit.abs().max(1e-300));
    ClassLimit { residue, limit, converged, estimates }
}

fn closed_form(group: &GroupDescriptor, g: &PlacedMatrix, orientation: Orientation) -> Result<Option<f64>> {
    let real = match g.real() {
        Some(r) => r.to_f64(),
        None => return Ok(None),
    };
    match group {
        GroupDescriptor::Stab2 { v, norm: NormKind::Frobenius } => {
            Ok(Some(stab_ratio_closed_form(*v, &real, orientation)?))
        }
        GroupDescriptor::UniPair { p, v_real, v_padic, real_norm: NormKind::Frobenius } => {
            let gp = match g.at_prime(*p) {
                Some(m) => m.clone(),
                None => return Ok(None),
            };
            let gp = match orientation {
                Orientation::Right => gp,
                Orientation::RightInverse => gp.inverse()?,
            };
            let u = [-v_padic[1].clone(), v_padic[0].clone()];
            let n = Matrix::from_fn(2, 2, |i, j| &v_padic[i] * &u[j]);
            let place = Place::Finite(*p);
            let a = matrix_norm(&n, place, NormKind::MaxEntry)?.to_f64();
            let b = matrix_norm(&n.matmul(&gp)?, place, NormKind::MaxEntry)?.to_f64();
            Ok(Some(stab_ratio_closed_form(*v_real, &real, orientation)? * a / b))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::super::sym2_translator;
    use super::*;
    use crate::exact_arith::Prime;
    use crate::linalg::RealMatrix;
    use std::collections::BTreeMap;

    fn real_placed(m: Matrix<f64>) -> PlacedMatrix {
        PlacedMatrix::new(2, Some(RealMatrix::Float(m)), BTreeMap::new()).unwrap()
    }

    #[test]
    fn stab_diagonal_limit_matches_closed_form() {
        let v = [1.0, 2f64.sqrt()];
        let group = GroupDescriptor::Stab2 { v, norm: NormKind::Frobenius };
        for x in [0.5, 1.7, 3.0] {
            let g = real_placed(Matrix::diagonal(&[x, 1.0 / x]));
            let r = skew_ball_ratio_limit(&group, &g, Orientation::Right, &LadderOptions::default()).unwrap();
            assert!(r.converged && r.modulus == 1);
            let cf = r.closed_form.unwrap();
            assert!((r.classes[0].limit - cf).abs() <= 1e-6 * cf, "x={x}");
        }
    }

    #[test]
    fn sym2_needs_two_classes() {
        let p = Prime::new(3).unwrap();
        let group = GroupDescriptor::Sym2Unipotent { p };
        let opts = LadderOptions { t0: 3.0, steps: 10, ..LadderOptions::default() };
        let r = skew_ball_ratio_limit(&group, &sym2_translator(p), Orientation::Right, &opts).unwrap();
        assert!(r.converged);
        assert_eq!(r.modulus, 2);
        // k = 0 is t = p^1 (odd exponent), k = 1 is t = p^2.
        assert!((r.classes[0].limit - 1.0).abs() < 1e-12);
        assert!((r.classes[1].limit - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unipair_limit_matches_closed_form() {
        let p = Prime::new(2).unwrap();
        let group = GroupDescriptor::UniPair {
            p,
            v_real: [1.0, 0.5],
            v_padic: [ExactScalar::one(), ExactScalar::from_int(3)],
            real_norm: NormKind::Frobenius,
        };
        let gp = Matrix::from_rows(vec![
            vec![ExactScalar::from_int(2), ExactScalar::zero()],
            vec![ExactScalar::zero(), ExactScalar::new(1, 2).unwrap()],
        ])
        .unwrap();
        let mut finite = BTreeMap::new();
        finite.insert(p, gp);
        let g = PlacedMatrix::new(
            2,
            Some(RealMatrix::Float(Matrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap())),
            finite,
        )
        .unwrap();
        let r = skew_ball_ratio_limit(&group, &g, Orientation::Right, &LadderOptions::default()).unwrap();
        assert!(r.converged);
        let cf = r.closed_form.unwrap();
        for c in &r.classes {
            assert!((c.limit - cf).abs() <= 1e-6 * cf);
        }
    }

    #[test]
    fn rejects_degenerate_ladders() {
        let group = GroupDescriptor::Stab2 { v: [1.0, 0.0], norm: NormKind::Frobenius };
        let g = real_placed(Matrix::identity(2));
        let opts = LadderOptions { steps: 2, ..LadderOptions::default() };
        assert!(skew_ball_ratio_limit(&group, &g, Orientation::Right, &opts).is_err());
    }
}
