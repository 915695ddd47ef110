//! Targeted enumeration of the part of an `SL(2, Z[1/p])` ball that can move
//! a fixed pair `(v_inf, v_p)` into a bounded product region.
//!
//! Each row of `M = p^m gamma` must satisfy `|row . v_inf| <= p^m r` at the
//! real place and a congruence `row . v_p = 0 mod p^e` at `p`, so rows are
//! drawn from a thin strip and an arithmetic progression instead of a disk.
//! The output is a superset of the elements with `|(gamma v_inf)_i| <= r` and
//! `|gamma v_p|_p <= p^s`; callers evaluate their exact predicate on it.

use num_integer::Integer;
use rayon::prelude::*;

use super::sl2::{intersect, LevelBounds, Line};
use super::{BallSpec, GroupElement};
use crate::error::{invalid, Error, Result};
use crate::exact_arith::{mod_inverse_i128, ExactScalar, Prime, Valuation};
use crate::linalg::{IntMatrix, NormKind, Radius};

const CHUNK: i64 = 512;

#[derive(Clone, Debug)]
pub struct StripQuery {
    pub p: Prime,
    pub t_inf: Radius,
    pub t_p: Radius,
    pub real_norm: NormKind,
    pub v_real: [f64; 2],
    /// Bound on each coordinate of `gamma v_inf`.
    pub real_reach: f64,
    pub v_padic: [ExactScalar; 2],
    /// Keep `|gamma v_p|_p <= p^padic_reach`.
    pub padic_reach: i64,
    pub capacity: u64,
}

#[derive(Clone, Debug)]
struct StripLevel {
    bounds: LevelBounds,
    /// `p^e` and the residues of the normalized p-adic vector modulo it.
    modulus: i128,
    beta: [i128; 2],
    /// `p^m r`.
    reach: f64,
}

#[derive(Clone, Copy, Debug)]
struct Unit {
    level: usize,
    lo: i64,
    hi: i64,
}

/// A validated strip enumeration.
#[derive(Clone, Debug)]
pub struct StripBall {
    query: StripQuery,
    levels: Vec<StripLevel>,
    /// Column whose p-adic coefficient is a unit; it is the inner loop variable.
    inner: usize,
}

impl StripBall {
    pub fn new(query: StripQuery) -> Result<Self> {
        let spec = BallSpec::sl2_zinvp(query.p, query.t_inf.clone(), query.t_p.clone(), query.real_norm);
        spec.validate()?;
        if !(query.real_reach > 0.0) || query.v_real.iter().any(|x| !x.is_finite()) {
            return Err(invalid("strip needs a positive real reach and a finite real vector"));
        }
        if query.v_real.iter().all(|&x| x == 0.0) {
            return Err(invalid("real vector must be nonzero"));
        }
        let p = query.p;
        let vals: Vec<Valuation> = query.v_padic.iter().map(|x| x.padic_valuation(p)).collect();
        let q = vals
            .iter()
            .filter_map(|v| v.finite())
            .min()
            .ok_or_else(|| invalid("p-adic vector must be nonzero"))?;
        let normalized: Vec<ExactScalar> =
            query.v_padic.iter().map(|x| x * &ExactScalar::prime_power(p, -q)).collect();
        let inner = if vals[0] == Valuation::Finite(q) { 0 } else { 1 };

        let mut levels = Vec::new();
        let mut work = 0.0;
        for m in 0..=spec.max_level() {
            let bounds = LevelBounds::new(&spec, m)?;
            let e = (m as i64 - q - query.padic_reach).max(0) as u32;
            let modulus = p.pow_i128(e).filter(|&x| x < (1i128 << 62)).ok_or_else(|| invalid("congruence modulus too large"))?;
            let mut beta = [0i128; 2];
            for (b, x) in beta.iter_mut().zip(&normalized) {
                let r = x.residue_mod_prime_power(p, e).expect("normalized vector is p-integral");
                *b = i128::try_from(r).expect("residue below modulus");
            }
            let reach = (p.get() as f64).powi(m as i32) * query.real_reach;
            let radius = bounds.lead_bound() as f64;
            work += 2.0 * radius + 4.0 * reach * radius / (modulus as f64);
            levels.push(StripLevel { bounds, modulus, beta, reach });
        }
        if work > query.capacity as f64 {
            return Err(Error::Capacity { predicted: work as u64, limit: query.capacity });
        }
        Ok(StripBall { query, levels, inner })
    }

    fn units(&self) -> Vec<Unit> {
        let mut out = Vec::new();
        for (i, l) in self.levels.iter().enumerate() {
            let b = l.bounds.lead_bound();
            let mut lo = -b;
            while lo <= b {
                let hi = (lo + CHUNK - 1).min(b);
                out.push(Unit { level: i, lo, hi });
                lo = hi + 1;
            }
        }
        out
    }

    pub fn for_each(&self, mut f: impl FnMut(&GroupElement)) {
        for u in self.units() {
            self.visit(u, &mut f);
        }
    }

    pub fn collect(&self) -> Vec<GroupElement> {
        let mut out = Vec::new();
        self.for_each(|g| out.push(*g));
        out
    }

    /// Parallel fold; `reduce` must be associative.
    pub fn par_fold<A: Send>(
        &self,
        init: impl Fn() -> A + Sync + Send,
        fold: impl Fn(A, &GroupElement) -> A + Sync + Send,
        reduce: impl Fn(A, A) -> A + Sync + Send,
    ) -> A {
        self.units()
            .into_par_iter()
            .map(|u| {
                let mut acc = Some(init());
                self.visit(u, &mut |g| acc = Some(fold(acc.take().expect("accumulator present"), g)));
                acc.expect("accumulator present")
            })
            .reduce(&init, &reduce)
    }

    fn visit(&self, unit: Unit, f: &mut dyn FnMut(&GroupElement)) {
        let lvl = &self.levels[unit.level];
        let lb = &lvl.bounds;
        let (inner, outer) = (self.inner, 1 - self.inner);
        let v = self.query.v_real;
        let reach = lvl.reach;
        let slack = 1e-9 * reach + 1e-9;
        // x_inner = -y * beta_outer / beta_inner mod P.
        let inv = if lvl.modulus == 1 {
            0
        } else {
            mod_inverse_i128(lvl.beta[inner], lvl.modulus).expect("unit coefficient")
        };
        for y in unit.lo..=unit.hi {
            let norm_range = match lb.kind {
                NormKind::Frobenius => {
                    let rest = lb.frob - (y as i128) * (y as i128);
                    if rest < 0 {
                        continue;
                    }
                    let b = num_integer::Roots::sqrt(&rest) as i64;
                    (-b, b)
                }
                NormKind::MaxEntry => (-lb.entry, lb.entry),
            };
            let strip_range = if v[inner].abs() > 1e-300 {
                let a = (-reach - y as f64 * v[outer]) / v[inner];
                let b = (reach - y as f64 * v[outer]) / v[inner];
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                let s = slack * (1.0 + a.abs().max(b.abs()));
                ((a - s).ceil() as i64, (b + s).floor() as i64)
            } else if (y as f64 * v[outer]).abs() <= reach + slack {
                norm_range
            } else {
                continue;
            };
            let Some((lo, hi)) = intersect(norm_range, strip_range) else { continue };
            let (start, step) = if lvl.modulus == 1 {
                (lo, 1)
            } else {
                let res = (-(y as i128) * lvl.beta[outer] % lvl.modulus * inv).rem_euclid(lvl.modulus);
                let first = lo as i128 + (res - lo as i128).rem_euclid(lvl.modulus);
                (first as i64, lvl.modulus as i64)
            };
            let mut x = start;
            while x <= hi {
                let mut row = [0i64; 2];
                row[inner] = x;
                row[outer] = y;
                self.second_rows(lvl, row, f);
                x += step;
            }
        }
    }

    fn second_rows(&self, lvl: &StripLevel, row: [i64; 2], f: &mut dyn FnMut(&GroupElement)) {
        let lb = &lvl.bounds;
        let [a, b] = row;
        if a == 0 && b == 0 {
            return;
        }
        let g = a.gcd(&b);
        let p = self.query.p.get() as i64;
        if g > 1 {
            let mut x = g;
            while x % p == 0 {
                x /= p;
            }
            if x != 1 || lb.det % g as i128 != 0 {
                return;
            }
        }
        let line = Line::new(a, b, g, lb.det);
        let norm = match lb.kind {
            NormKind::Frobenius => line.frobenius_range(lb.frob - (a as i128 * a as i128 + b as i128 * b as i128)),
            NormKind::MaxEntry => line.entry_range(lb.entry),
        };
        let Some(mut range) = norm else { return };

        let v = self.query.v_real;
        let base = line.base.0 as f64 * v[0] + line.base.1 as f64 * v[1];
        let slope = line.step.0 as f64 * v[0] + line.step.1 as f64 * v[1];
        let reach = lvl.reach;
        let slack = 1e-9 * (reach + base.abs()) + 1e-9;
        if slope.abs() > 1e-300 {
            let lo = (-reach - base) / slope;
            let hi = (reach - base) / slope;
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let s = slack / slope.abs();
            let strip = ((lo - s).ceil().max(i64::MIN as f64 / 4.0) as i64, (hi + s).floor().min(i64::MAX as f64 / 4.0) as i64);
            match intersect(range, strip) {
                Some(r) => range = r,
                None => return,
            }
        } else if base.abs() > reach + slack {
            return;
        }

        let (mut t, step) = if lvl.modulus == 1 {
            (range.0, 1i64)
        } else {
            let modulus = lvl.modulus;
            let beta0 = (line.base.0.rem_euclid(modulus) * lvl.beta[0] + line.base.1.rem_euclid(modulus) * lvl.beta[1]).rem_euclid(modulus);
            let delta = (line.step.0.rem_euclid(modulus) * lvl.beta[0] + line.step.1.rem_euclid(modulus) * lvl.beta[1]).rem_euclid(modulus);
            match solve_linear_congruence(beta0, delta, modulus, self.query.p.get() as i128) {
                Some((res, m)) => {
                    let first = range.0 as i128 + (res - range.0 as i128).rem_euclid(m);
                    (first as i64, m as i64)
                }
                None => return,
            }
        };
        while t <= range.1 {
            let (c, d) = line.at(t);
            t += step;
            if g > 1 && c % p == 0 && d % p == 0 {
                continue;
            }
            f(&GroupElement { level: lb.level, matrix: IntMatrix::sl2(a, b, c, d) });
        }
    }
}

/// Solutions of `beta + t delta = 0 mod P` (`P` a power of `p`) as `t = res mod m`.
fn solve_linear_congruence(beta: i128, delta: i128, modulus: i128, p: i128) -> Option<(i128, i128)> {
    let mut pj = 1i128;
    let mut d = delta;
    while d != 0 && d % p == 0 && pj < modulus {
        d /= p;
        pj *= p;
    }
    if delta == 0 {
        pj = modulus;
    }
    if beta % pj != 0 {
        return None;
    }
    let m = modulus / pj;
    if m == 1 {
        return Some((0, 1));
    }
    let inv = mod_inverse_i128(d.rem_euclid(m), m)?;
    Some(((-(beta / pj) % m * inv).rem_euclid(m), m))
}

#[cfg(test)]
mod tests {
    use super::super::{Ball, BallSpec};
    use super::*;
    use std::collections::BTreeSet;

    fn query(t: i64, t_p: i64, reach: f64, s: i64, v_p: [i64; 2]) -> StripQuery {
        StripQuery {
            p: Prime::new(2).unwrap(),
            t_inf: Radius::from_int(t).unwrap(),
            t_p: Radius::from_int(t_p).unwrap(),
            real_norm: NormKind::Frobenius,
            v_real: [1.0, 2f64.sqrt()],
            real_reach: reach,
            v_padic: [ExactScalar::from_int(v_p[0]), ExactScalar::from_int(v_p[1])],
            padic_reach: s,
            capacity: 100_000_000,
        }
    }

    fn in_region(q: &StripQuery, g: &GroupElement) -> bool {
        let w = g.act_real(&q.v_real, Some(q.p));
        if w.iter().any(|x| x.abs() > q.real_reach) {
            return false;
        }
        let m = g.to_exact(Some(q.p));
        (0..2).all(|i| {
            let x = &m[(i, 0)] * &q.v_padic[0] + &m[(i, 1)] * &q.v_padic[1];
            x.padic_abs(q.p) <= ExactScalar::prime_power(q.p, q.padic_reach)
        })
    }

    #[test]
    fn linear_congruences() {
        for modulus in [1i128, 2, 4, 8, 16] {
            for beta in 0..modulus {
                for delta in 0..modulus {
                    let brute: Vec<i128> = (0..modulus).filter(|t| (beta + t * delta) % modulus == 0).collect();
                    let got: Vec<i128> = match solve_linear_congruence(beta, delta, modulus, 2) {
                        Some((r, m)) => (0..modulus).filter(|t| t.rem_euclid(m) == r).collect(),
                        None => vec![],
                    };
                    assert_eq!(got, brute, "beta={beta} delta={delta} P={modulus}");
                }
            }
        }
    }

    #[test]
    fn strip_covers_the_region() {
        for (t, t_p, reach, s, vp) in [(8, 4, 2.0, 0, [1, 3]), (10, 8, 1.5, 1, [2, 1]), (6, 2, 3.0, -1, [1, 1]), (9, 4, 2.5, 0, [4, 3])] {
            let q = query(t, t_p, reach, s, vp);
            let strip = StripBall::new(q.clone()).unwrap().collect();
            let strip_set: BTreeSet<_> = strip.iter().copied().collect();
            assert_eq!(strip_set.len(), strip.len(), "duplicates");
            let spec = BallSpec::sl2_zinvp(q.p, q.t_inf.clone(), q.t_p.clone(), q.real_norm);
            let full: BTreeSet<_> = Ball::new(spec).unwrap().collect().into_iter().collect();
            assert!(strip_set.is_subset(&full));
            let want: BTreeSet<_> = full.iter().filter(|g| in_region(&q, g)).copied().collect();
            let got: BTreeSet<_> = strip_set.iter().filter(|g| in_region(&q, g)).copied().collect();
            assert!(!want.is_empty());
            assert_eq!(got, want, "T={t} T_p={t_p} r={reach} s={s}");
        }
    }

    #[test]
    fn strip_fold_matches_walk() {
        let ball = StripBall::new(query(40, 16, 2.0, 0, [1, 3])).unwrap();
        let n = ball.collect().len() as u64;
        assert_eq!(ball.par_fold(|| 0u64, |a, _| a + 1, |a, b| a + b), n);
    }
}
