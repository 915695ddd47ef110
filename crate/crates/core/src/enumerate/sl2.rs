use num_integer::{Integer, Roots};
use num_traits::ToPrimitive;

use super::{BallSpec, GroupElement};
use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Prime};
use crate::linalg::{IntMatrix, NormKind};

/// Integer bounds for the level-`m` slice `M = p^m gamma` of a ball.
#[derive(Clone, Debug)]
pub(crate) struct LevelBounds {
    pub level: u32,
    pub prime: Option<Prime>,
    pub kind: NormKind,
    /// Required determinant `p^(2m)` of `M`.
    pub det: i128,
    /// `floor(p^(2m) T^2)`: bound on the squared Frobenius norm of `M`.
    pub frob: i128,
    /// `floor(p^m T)`: bound on the entries of `M`.
    pub entry: i64,
}

impl LevelBounds {
    pub fn new(spec: &BallSpec, level: u32) -> Result<Self> {
        let prime = spec.lattice.prime();
        let scale2 = match prime {
            Some(p) => ExactScalar::prime_power(p, 2 * level as i64),
            None => ExactScalar::one(),
        };
        let sq = spec.t_inf.squared() * &scale2;
        let frob_big = sq.floor();
        let frob = frob_big.to_i128().ok_or_else(|| invalid("ball radius too large"))?;
        let entry = frob_big.sqrt().to_i64().ok_or_else(|| invalid("ball radius too large"))?;
        if entry > (1i64 << 40) {
            return Err(invalid("ball radius too large for machine-integer enumeration"));
        }
        Ok(LevelBounds {
            level,
            prime,
            kind: spec.real_norm,
            det: scale2.to_i64().ok_or_else(|| invalid("level too large"))? as i128,
            frob,
            entry,
        })
    }

    pub fn lead_bound(&self) -> i64 {
        match self.kind {
            NormKind::Frobenius => self.frob.sqrt() as i64,
            NormKind::MaxEntry => self.entry,
        }
    }

    /// Whether `g` is a power of the level prime dividing the determinant.
    fn admissible_gcd(&self, g: i64) -> bool {
        if g == 1 {
            return true;
        }
        match self.prime {
            Some(p) if self.level > 0 => {
                let p = p.get() as i64;
                let mut x = g;
                while x % p == 0 {
                    x /= p;
                }
                x == 1 && self.det % g as i128 == 0
            }
            _ => false,
        }
    }
}

/// `(x, y)` with `a x + b y = 1` for coprime `a, b`.
pub(crate) fn bezout(a: i64, b: i64) -> (i64, i64) {
    let e = a.extended_gcd(&b);
    debug_assert_eq!(e.gcd.abs(), 1);
    if e.gcd < 0 {
        (-e.x, -e.y)
    } else {
        (e.x, e.y)
    }
}

/// Integers `t` with `n t^2 + 2 k t + c <= 0` (`n > 0`), as an inclusive range.
pub(crate) fn quadratic_range(n: i128, k: i128, c: i128) -> Option<(i64, i64)> {
    let q = |t: i128| n * t * t + 2 * k * t + c;
    let disc = (k as f64) * (k as f64) - (n as f64) * (c as f64);
    if disc < -1.0 {
        return None;
    }
    let r = disc.max(0.0).sqrt();
    let mut lo = ((-k as f64 - r) / n as f64).ceil() as i128;
    let mut hi = ((-k as f64 + r) / n as f64).floor() as i128;
    // Float roots are close; settle the ends exactly.
    while q(lo - 1) <= 0 {
        lo -= 1;
    }
    while lo <= hi && q(lo) > 0 {
        lo += 1;
    }
    while q(hi + 1) <= 0 {
        hi += 1;
    }
    while hi >= lo && q(hi) > 0 {
        hi -= 1;
    }
    if lo > hi {
        // The float window may miss a single valid point near the vertex.
        let v = Integer::div_floor(&-k, &n);
        for t in [v, v + 1] {
            if q(t) <= 0 {
                return Some((t as i64, t as i64));
            }
        }
        return None;
    }
    Some((lo as i64, hi as i64))
}

/// Integers `t` with `lo <= base + t * step <= hi`.
pub(crate) fn linear_range(base: i128, step: i128, lo: i128, hi: i128) -> Option<(i64, i64)> {
    if step == 0 {
        return if lo <= base && base <= hi { Some((i64::MIN / 4, i64::MAX / 4)) } else { None };
    }
    let (a, b) = if step > 0 {
        (Integer::div_ceil(&(lo - base), &step), Integer::div_floor(&(hi - base), &step))
    } else {
        (Integer::div_ceil(&(hi - base), &step), Integer::div_floor(&(lo - base), &step))
    };
    (a <= b).then_some((a as i64, b as i64))
}

pub(crate) fn intersect(a: (i64, i64), b: (i64, i64)) -> Option<(i64, i64)> {
    let r = (a.0.max(b.0), a.1.min(b.1));
    (r.0 <= r.1).then_some(r)
}

/// Second rows/columns solving a 2x2 determinant condition: every `(b, d)`
/// with `a d - b c = det` and `gcd(a, c) = g`, as `base + t * step`.
pub(crate) struct Line {
    pub base: (i128, i128),
    pub step: (i128, i128),
}

impl Line {
    pub fn new(a: i64, c: i64, g: i64, det: i128) -> Self {
        let (a1, c1) = (a / g, c / g);
        // a1 x + c1 y = 1  =>  a1 * x - c1 * (-y) = 1.
        let (x, y) = bezout(a1, c1);
        let scale = det / g as i128;
        let (mut b0, mut d0) = (-(y as i128) * scale, x as i128 * scale);
        let (sa, sc) = (a1 as i128, c1 as i128);
        // Recentre so the base is nearly orthogonal to the step.
        let n = sa * sa + sc * sc;
        let k = sa * b0 + sc * d0;
        let t0 = Integer::div_floor(&-k, &n);
        b0 += t0 * sa;
        d0 += t0 * sc;
        Line { base: (b0, d0), step: (sa, sc) }
    }

    pub fn at(&self, t: i64) -> (i64, i64) {
        let t = t as i128;
        ((self.base.0 + t * self.step.0) as i64, (self.base.1 + t * self.step.1) as i64)
    }

    /// Range of `t` with `|base + t step|^2 <= budget`.
    pub fn frobenius_range(&self, budget: i128) -> Option<(i64, i64)> {
        let (b, d) = self.base;
        let (sa, sc) = self.step;
        quadratic_range(sa * sa + sc * sc, sa * b + sc * d, b * b + d * d - budget)
    }

    /// Range of `t` with both coordinates bounded by `bound` in absolute value.
    pub fn entry_range(&self, bound: i64) -> Option<(i64, i64)> {
        let b = bound as i128;
        intersect(
            linear_range(self.base.0, self.step.0, -b, b)?,
            linear_range(self.base.1, self.step.1, -b, b)?,
        )
    }
}

/// All level-`m` elements whose first column starts with `a`.
pub(crate) fn visit_column(lb: &LevelBounds, a: i64, emit: &mut dyn FnMut(&GroupElement)) {
    let c_bound = match lb.kind {
        NormKind::Frobenius => {
            let rest = lb.frob - (a as i128) * (a as i128);
            if rest < 0 {
                return;
            }
            rest.sqrt() as i64
        }
        NormKind::MaxEntry => lb.entry,
    };
    for c in -c_bound..=c_bound {
        if a == 0 && c == 0 {
            continue;
        }
        let g = a.gcd(&c);
        if !lb.admissible_gcd(g) {
            continue;
        }
        let line = Line::new(a, c, g, lb.det);
        let range = match lb.kind {
            NormKind::Frobenius => line.frobenius_range(lb.frob - (a as i128 * a as i128 + c as i128 * c as i128)),
            NormKind::MaxEntry => line.entry_range(lb.entry),
        };
        let Some((lo, hi)) = range else { continue };
        let p = lb.prime.map_or(1, |p| p.get() as i64);
        for t in lo..=hi {
            let (b, d) = line.at(t);
            if g > 1 && b % p == 0 && d % p == 0 {
                continue;
            }
            emit(&GroupElement { level: lb.level, matrix: IntMatrix::sl2(a, b, c, d) });
        }
    }
}
