//! Haar measure of sublevel sets `{s : |P_i(s)| <= t for all i}` of
//! one-parameter polynomial families, at the real place and at a prime.

use crate::error::{invalid, Error, Result};
use crate::exact_arith::{ExactScalar, Prime, Valuation};

/// Lebesgue measure of `{s in R : |P_i(s)| <= t for all i}`; every `P_i` has
/// degree at most 2 and coefficients in increasing degree.
pub fn real_sublevel_measure(polys: &[Vec<f64>], t: f64) -> Result<f64> {
    let mut cuts = Vec::new();
    for p in polys {
        let p = trim(p);
        if p.len() > 3 {
            return Err(Error::Unsupported("real sublevel sets of degree above 2".into()));
        }
        for shift in [t, -t] {
            let mut q = p.clone();
            if q.is_empty() {
                continue;
            }
            q[0] -= shift;
            cuts.extend(real_roots(&q));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let inside = |s: f64| polys.iter().all(|p| eval(p, s).abs() <= t);
    if cuts.is_empty() {
        return if inside(0.0) { Err(invalid("sublevel set is unbounded")) } else { Ok(0.0) };
    }
    let (first, last) = (cuts[0], cuts[cuts.len() - 1]);
    let span = (last - first).abs().max(1.0);
    if inside(first - span) || inside(last + span) {
        return Err(invalid("sublevel set is unbounded"));
    }
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if inside(0.5 * (w[0] + w[1])) {
            total += w[1] - w[0];
        }
    }
    Ok(total)
}

fn trim(p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

fn eval(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn real_roots(p: &[f64]) -> Vec<f64> {
    match p.len() {
        2 => vec![-p[0] / p[1]],
        3 => {
            let (c, b, a) = (p[0], p[1], p[2]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return vec![];
            }
            // Numerically stable pair of roots.
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q == 0.0 {
                return vec![0.0];
            }
            vec![q / a, c / q]
        }
        _ => vec![],
    }
}

/// Polynomial in one variable with exact rational coefficients (increasing degree).
pub type ExactPoly = Vec<ExactScalar>;

fn exact_degree(p: &ExactPoly) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

/// Coefficients of `P(c + x)`.
fn taylor_shift(p: &ExactPoly, c: &ExactScalar) -> ExactPoly {
    let mut out = p.clone();
    let n = out.len();
    // Repeated synthetic division.
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let add = &out[j + 1] * c;
            out[j] += add;
        }
    }
    out
}

fn val(x: &ExactScalar, p: Prime) -> Option<i64> {
    match x.padic_valuation(p) {
        Valuation::Finite(v) => Some(v),
        Valuation::PositiveInfinity => None,
    }
}

#[derive(PartialEq)]
enum Status {
    In,
    Out,
    Split,
}

/// Status of `v_p(P) >= -n` on the ball `c + p^k Z_p`.
fn status(p: Prime, poly: &ExactPoly, c: &ExactScalar, k: i64, n: i64) -> Status {
    let a = taylor_shift(poly, c);
    let v0 = val(&a[0], p);
    let mu = a
        .iter()
        .enumerate()
        .skip(1)
        .filter_map(|(j, x)| val(x, p).map(|v| v + j as i64 * k))
        .min();
    match (v0, mu) {
        (Some(v0), Some(mu)) if v0 < mu => {
            if v0 >= -n {
                Status::In
            } else {
                Status::Out
            }
        }
        (None, None) => Status::In,
        (Some(v0), None) => {
            if v0 >= -n {
                Status::In
            } else {
                Status::Out
            }
        }
        (_, Some(mu)) => {
            if mu >= -n && v0.is_none_or(|v| v >= -n) {
                Status::In
            } else {
                Status::Split
            }
        }
    }
}

/// Haar measure (with `Z_p` of mass 1) of `{s in Q_p : |P_i(s)|_p <= p^n for all i}`.
///
/// The set is a finite union of balls, found by recursive subdivision using
/// Taylor expansions at ball centres.
pub fn padic_sublevel_measure(p: Prime, polys: &[ExactPoly], n: i64) -> Result<ExactScalar> {
    let mut active = Vec::new();
    for poly in polys {
        match exact_degree(poly) {
            None => {}
            Some(0) => {
                if val(&poly[0], p).is_some_and(|v| v < -n) {
                    return Ok(ExactScalar::zero());
                }
            }
            Some(d) => active.push(poly[..=d].to_vec()),
        }
    }
    if active.is_empty() {
        return Err(invalid("p-adic sublevel set is unbounded"));
    }
    // Any nonconstant P is dominated by its leading term for |s| >= p^r.
    let mut r_min = i64::MAX;
    for poly in &active {
        let d = poly.len() - 1;
        let vd = val(&poly[d], p).expect("nonzero leading coefficient");
        let mut r = (vd + n).div_euclid(d as i64) + 1;
        for (j, a) in poly.iter().enumerate().take(d) {
            if let Some(vj) = val(a, p) {
                r = r.max((vd - vj).div_euclid((d - j) as i64) + 1);
            }
        }
        r_min = r_min.min(r);
    }
    // The set lies in the ball of radius p^(r_min - 1) around 0.
    let k0 = -(r_min - 1);
    let mut total = ExactScalar::zero();
    let mut stack = vec![(ExactScalar::zero(), k0)];
    while let Some((c, k)) = stack.pop() {
        if k - k0 > 400 {
            return Err(Error::Divergence("p-adic subdivision did not terminate".into()));
        }
        let mut all_in = true;
        let mut out = false;
        for poly in &active {
            match status(p, poly, &c, k, n) {
                Status::Out => {
                    out = true;
                    break;
                }
                Status::Split => all_in = false,
                Status::In => {}
            }
        }
        if out {
            continue;
        }
        if all_in {
            total += ExactScalar::prime_power(p, -k);
            continue;
        }
        let step = ExactScalar::prime_power(p, k);
        let mut offset = ExactScalar::zero();
        for _ in 0..p.get() {
            stack.push((&c + &offset, k + 1));
            offset = offset + &step;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> ExactScalar {
        ExactScalar::from_int(n)
    }

    fn pr(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn real_intervals() {
        // |s| <= 3 and |s^2| <= 4  ->  [-2, 2].
        let m = real_sublevel_measure(&[vec![0.0, 1.0], vec![0.0, 0.0, 1.0]], 4.0).unwrap();
        assert!((m - 4.0).abs() < 1e-12);
        // |1 + s| <= 1  ->  [-2, 0].
        let m = real_sublevel_measure(&[vec![1.0, 1.0], vec![1.0]], 1.0).unwrap();
        assert!((m - 2.0).abs() < 1e-12);
        // A constant above the bound empties the set.
        assert_eq!(real_sublevel_measure(&[vec![5.0], vec![0.0, 1.0]], 1.0).unwrap(), 0.0);
        assert!(real_sublevel_measure(&[vec![1.0]], 2.0).is_err());
        // Two disjoint intervals: |s^2 - 4| <= 1  ->  s^2 in [3, 5].
        let m = real_sublevel_measure(&[vec![-4.0, 0.0, 1.0]], 1.0).unwrap();
        assert!((m - 2.0 * (5f64.sqrt() - 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn taylor_shift_matches_direct_expansion() {
        // (c + x)^2 + 3(c + x) + 1 at c = 2: x^2 + 7x + 11.
        let p = vec![q(1), q(3), q(1)];
        assert_eq!(taylor_shift(&p, &q(2)), vec![q(11), q(7), q(1)]);
    }

    /// Measure by counting residues: for sets that are unions of balls of radius
    /// at least p^-depth inside p^-r Z_p, sample one point per small ball.
    fn residue_count(p: u64, polys: &[ExactPoly], n: i64, r: i64, depth: i64) -> ExactScalar {
        let prime = pr(p);
        let cells = (p as i64).pow((r + depth) as u32);
        let scale = ExactScalar::prime_power(prime, -r);
        let mut hits = 0i64;
        for i in 0..cells {
            let s = &ExactScalar::from_int(i) * &scale;
            let ok = polys.iter().all(|poly| {
                let v = poly.iter().rev().fold(ExactScalar::zero(), |acc, c| acc * &s + c);
                v.is_zero() || v.padic_abs(prime) <= ExactScalar::prime_power(prime, n)
            });
            if ok {
                hits += 1;
            }
        }
        ExactScalar::from_int(hits) * ExactScalar::prime_power(prime, -depth)
    }

    #[test]
    fn padic_balls() {
        let p = pr(3);
        // |s|_3 <= 3^2.
        assert_eq!(padic_sublevel_measure(p, &[vec![q(0), q(1)]], 2).unwrap(), q(9));
        // |s^2|_3 <= 3^3  ->  |s| <= 3.
        assert_eq!(padic_sublevel_measure(p, &[vec![q(0), q(0), q(1)]], 3).unwrap(), q(3));
        // |s^2 / 3|_3 <= 1  ->  |s|^2 <= 1/3  ->  |s| <= 1/3.
        let third = ExactScalar::new(1, 3).unwrap();
        assert_eq!(padic_sublevel_measure(p, &[vec![q(0), q(0), third.clone()]], 0).unwrap(), ExactScalar::new(1, 3).unwrap());
        // Constant outside the bound.
        assert_eq!(padic_sublevel_measure(p, &[vec![third.clone()], vec![q(0), q(1)]], -1).unwrap(), q(0));
    }

    #[test]
    fn padic_matches_residue_counting() {
        for p in [2u64, 3, 5] {
            let polys = vec![vec![q(1), q(2), q(1)], vec![q(-2), q(0), q(p as i64)], vec![q(0), q(1)]];
            for n in -1..=2 {
                let exact = padic_sublevel_measure(pr(p), &polys, n).unwrap();
                let counted = residue_count(p, &polys, n, 3, 4);
                assert_eq!(exact, counted, "p={p} n={n}");
            }
        }
    }
}
