//! Symbolic real inputs of the form `a + b*sqrt(d)`, plus plain floats.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::{arch_precision, ArchPrecision, ExactScalar};
use crate::error::{Error, Result};

/// A real number supplied by the user.
///
/// Quadratic surds are kept exact so that rationality questions (continued
/// fraction termination, slope tests) are decided without rounding.
#[derive(Clone, PartialEq)]
pub enum SymbolicReal {
    /// `rational + coeff * sqrt(radicand)`; `radicand` is square-free and
    /// `coeff == 0` whenever `radicand == 1`.
    Surd {
        rational: ExactScalar,
        coeff: ExactScalar,
        radicand: u64,
    },
    Float(f64),
}

impl SymbolicReal {
    pub fn rational(q: ExactScalar) -> Self {
        SymbolicReal::Surd { rational: q, coeff: ExactScalar::zero(), radicand: 1 }
    }

    pub fn surd(rational: ExactScalar, coeff: ExactScalar, radicand: u64) -> Result<Self> {
        if radicand == 0 {
            return Ok(SymbolicReal::rational(rational));
        }
        let (square, free) = split_square(radicand);
        let coeff = coeff * ExactScalar::from_int(square);
        if free == 1 {
            return Ok(SymbolicReal::rational(rational + coeff));
        }
        if coeff.is_zero() {
            return Ok(SymbolicReal::rational(rational));
        }
        Ok(SymbolicReal::Surd { rational, coeff, radicand: free })
    }

    pub fn sqrt(d: u64) -> Result<Self> {
        SymbolicReal::surd(ExactScalar::zero(), ExactScalar::one(), d)
    }

    pub fn as_rational(&self) -> Option<&ExactScalar> {
        match self {
            SymbolicReal::Surd { rational, coeff, .. } if coeff.is_zero() => Some(rational),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match arch_precision() {
            ArchPrecision::Double => self.to_f64_direct(),
            ArchPrecision::Extended => f64::from(self.to_twofloat()),
        }
    }

    fn to_f64_direct(&self) -> f64 {
        match self {
            SymbolicReal::Surd { rational, coeff, radicand } => {
                rational.to_f64() + coeff.to_f64() * (*radicand as f64).sqrt()
            }
            SymbolicReal::Float(x) => *x,
        }
    }

    /// Double-double evaluation.
    pub fn to_twofloat(&self) -> TwoFloat {
        match self {
            SymbolicReal::Surd { rational, coeff, radicand } => {
                let r = ratio_to_twofloat(rational);
                if coeff.is_zero() {
                    return r;
                }
                r + ratio_to_twofloat(coeff) * TwoFloat::from(*radicand as f64).sqrt()
            }
            SymbolicReal::Float(x) => TwoFloat::from(*x),
        }
    }

    fn same_field(&self, other: &SymbolicReal) -> Option<u64> {
        match (self, other) {
            (SymbolicReal::Surd { radicand: a, .. }, SymbolicReal::Surd { radicand: b, .. }) => {
                match (*a, *b) {
                    (1, d) | (d, 1) => Some(d),
                    (x, y) if x == y => Some(x),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn parts(&self) -> (ExactScalar, ExactScalar) {
        match self {
            SymbolicReal::Surd { rational, coeff, .. } => (rational.clone(), coeff.clone()),
            SymbolicReal::Float(_) => unreachable!("parts of a float"),
        }
    }

    /// Exact quotient when both values lie in the same quadratic field.
    pub fn exact_div(&self, other: &SymbolicReal) -> Option<SymbolicReal> {
        let d = self.same_field(other)?;
        let (a1, b1) = self.parts();
        let (a2, b2) = other.parts();
        let dq = ExactScalar::from_int(d);
        let norm = &a2 * &a2 - &(&b2 * &b2) * &dq;
        if norm.is_zero() {
            return None;
        }
        // (a1 + b1 r)(a2 - b2 r) / (a2^2 - b2^2 d)
        let ra = (&a1 * &a2 - &(&b1 * &b2) * &dq) / norm.clone();
        let rb = (&b1 * &a2 - &a1 * &b2) / norm;
        SymbolicReal::surd(ra, rb, d).ok()
    }

    /// Exact sign for surds, float sign otherwise.
    pub fn signum(&self) -> i32 {
        match self {
            SymbolicReal::Surd { rational, coeff, radicand } => surd_sign(rational, coeff, *radicand),
            SymbolicReal::Float(x) => {
                if *x > 0.0 {
                    1
                } else if *x < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    /// Continued-fraction partial quotients of this number, at most `depth` of them.
    /// Returns `(quotients, terminated)`: termination means the value is rational
    /// (exactly, for surds; up to `float_tol` for floats).
    pub fn continued_fraction(&self, depth: usize, float_tol: f64) -> (Vec<BigInt>, bool) {
        match self {
            SymbolicReal::Surd { radicand, .. } => {
                let d = *radicand;
                let mut out = Vec::new();
                let (mut a, mut b) = self.parts();
                let dq = ExactScalar::from_int(d);
                for _ in 0..depth {
                    let fl = surd_floor(&a, &b, d);
                    out.push(fl.clone());
                    a -= ExactScalar::from_int(fl);
                    if a.is_zero() && b.is_zero() {
                        return (out, true);
                    }
                    let norm = &a * &a - &(&b * &b) * &dq;
                    a = &a / &norm;
                    b = -(&b / &norm);
                }
                (out, false)
            }
            SymbolicReal::Float(x) => {
                let mut out = Vec::new();
                let mut v = *x;
                for _ in 0..depth {
                    let fl = v.floor();
                    out.push(BigInt::from(fl as i64));
                    let frac = v - fl;
                    if frac.abs() < float_tol {
                        return (out, true);
                    }
                    v = 1.0 / frac;
                    if !v.is_finite() || v.abs() > 1.0 / float_tol {
                        return (out, true);
                    }
                }
                (out, false)
            }
        }
    }
}

fn ratio_to_twofloat(q: &ExactScalar) -> TwoFloat {
    let hi = q.to_f64();
    // residual q - hi is exact as a rational; its double approximation is the low word
    let lo = match ExactScalar::from_f64(hi) {
        Ok(h) => (q - &h).to_f64(),
        Err(_) => 0.0,
    };
    TwoFloat::from(hi) + TwoFloat::from(lo)
}

fn split_square(mut n: u64) -> (u64, u64) {
    let mut square = 1u64;
    let mut f = 2u64;
    while f * f <= n {
        while n.is_multiple_of(f * f) {
            n /= f * f;
            square *= f;
        }
        f += 1;
    }
    (square, n)
}

/// Sign of `a + b*sqrt(d)`.
fn surd_sign(a: &ExactScalar, b: &ExactScalar, d: u64) -> i32 {
    let sa = a.signum();
    let sb = b.signum();
    if d == 1 {
        return (a + b).signum();
    }
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    // opposite signs: compare a^2 with b^2 d
    let lhs = a * a;
    let rhs = &(b * b) * &ExactScalar::from_int(d);
    match lhs.cmp(&rhs) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

/// Exact floor of `a + b*sqrt(d)`.
fn surd_floor(a: &ExactScalar, b: &ExactScalar, d: u64) -> BigInt {
    let approx = a.to_f64() + b.to_f64() * (d as f64).sqrt();
    let mut n = BigInt::from(approx.floor() as i64);
    // correct the float guess exactly
    loop {
        let low = a - &ExactScalar::from_int(n.clone());
        if surd_sign(&low, b, d) < 0 {
            n -= 1;
            continue;
        }
        let high = a - &ExactScalar::from_int(&n + BigInt::one());
        if surd_sign(&high, b, d) >= 0 {
            n += 1;
            continue;
        }
        return n;
    }
}

impl fmt::Display for SymbolicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolicReal::Surd { rational, coeff, radicand } => {
                if coeff.is_zero() {
                    return write!(f, "{rational}");
                }
                let coeff_str = if coeff.is_one() {
                    String::new()
                } else if *coeff == -ExactScalar::one() {
                    "-".to_string()
                } else {
                    format!("{coeff}*")
                };
                if rational.is_zero() {
                    write!(f, "{coeff_str}sqrt({radicand})")
                } else if coeff.signum() < 0 {
                    let pos = coeff.abs();
                    let c = if pos.is_one() { String::new() } else { format!("{pos}*") };
                    write!(f, "{rational}-{c}sqrt({radicand})")
                } else {
                    write!(f, "{rational}+{coeff_str}sqrt({radicand})")
                }
            }
            SymbolicReal::Float(x) => write!(f, "{x:e}"),
        }
    }
}

impl fmt::Debug for SymbolicReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for SymbolicReal {
    type Err = Error;

    /// Grammar: a sum of terms, each `q`, `q*sqrt(d)`, `sqrt(d)`, `sqrt(d)/k`,
    /// or a single float literal with an exponent (`1e-3`).
    fn from_str(s: &str) -> Result<Self> {
        let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if src.is_empty() {
            return Err(Error::Parse("empty real".into()));
        }
        if src.contains(['e', 'E']) && !src.contains("sqrt") {
            let x: f64 = src.parse().map_err(|_| Error::Parse(format!("bad real {s:?}")))?;
            return Ok(SymbolicReal::Float(x));
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, ch) in src.char_indices() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.is_empty() {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        let mut rational = ExactScalar::zero();
        let mut coeff = ExactScalar::zero();
        let mut radicand = 1u64;
        for t in terms {
            let (r, c, d) = parse_term(&t).ok_or_else(|| Error::Parse(format!("bad real {s:?}")))?;
            rational += r;
            if !c.is_zero() {
                if radicand != 1 && radicand != d {
                    return Err(Error::Unsupported(format!("mixed radicals in {s:?}")));
                }
                radicand = d;
                coeff += c;
            }
        }
        SymbolicReal::surd(rational, coeff, radicand)
    }
}

fn parse_term(t: &str) -> Option<(ExactScalar, ExactScalar, u64)> {
    let (sign, body) = match t.strip_prefix('-') {
        Some(b) => (-1i64, b),
        None => (1, t.strip_prefix('+').unwrap_or(t)),
    };
    let sign = ExactScalar::from_int(sign);
    if let Some(pos) = body.find("sqrt(") {
        let prefix = &body[..pos];
        let rest = &body[pos + 5..];
        let close = rest.find(')')?;
        let d: u64 = rest[..close].parse().ok()?;
        let suffix = &rest[close + 1..];
        let mut c = match prefix.strip_suffix('*') {
            Some(p) => p.parse::<ExactScalar>().ok()?,
            None if prefix.is_empty() => ExactScalar::one(),
            None => return None,
        };
        if let Some(den) = suffix.strip_prefix('/') {
            let den: ExactScalar = den.parse().ok()?;
            if den.is_zero() {
                return None;
            }
            c = c / den;
        } else if !suffix.is_empty() {
            return None;
        }
        Some((ExactScalar::zero(), sign * c, d))
    } else {
        let q: ExactScalar = body.parse().ok()?;
        Some((sign * q, ExactScalar::zero(), 1))
    }
}

impl Serialize for SymbolicReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SymbolicReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<f64> for SymbolicReal {
    fn from(x: f64) -> Self {
        SymbolicReal::Float(x)
    }
}

impl From<ExactScalar> for SymbolicReal {
    fn from(q: ExactScalar) -> Self {
        SymbolicReal::rational(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_surds() {
        let r: SymbolicReal = "sqrt(2)".parse().unwrap();
        assert!((r.to_f64() - 2f64.sqrt()).abs() < 1e-15);
        let r: SymbolicReal = "1/2 - 3*sqrt(8)".parse().unwrap();
        // sqrt(8) = 2 sqrt(2)
        assert_eq!(r.to_string(), "1/2-6*sqrt(2)");
        let r: SymbolicReal = "sqrt(9)".parse().unwrap();
        assert_eq!(r.as_rational(), Some(&ExactScalar::from_int(3)));
        let r: SymbolicReal = "sqrt(3)/2".parse().unwrap();
        assert!((r.to_f64() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!("sqrt(2)+sqrt(3)".parse::<SymbolicReal>().is_err());
        assert!(matches!("1.5e-3".parse::<SymbolicReal>().unwrap(), SymbolicReal::Float(_)));
    }

    #[test]
    fn round_trips_display() {
        for s in ["3/4", "sqrt(2)", "-sqrt(5)", "1+sqrt(2)", "2-1/3*sqrt(7)"] {
            let r: SymbolicReal = s.parse().unwrap();
            let back: SymbolicReal = r.to_string().parse().unwrap();
            assert_eq!(r, back, "{s}");
        }
    }

    #[test]
    fn continued_fractions() {
        let r2: SymbolicReal = "sqrt(2)".parse().unwrap();
        let (cf, term) = r2.continued_fraction(12, 1e-12);
        assert!(!term);
        assert_eq!(cf[0], BigInt::from(1));
        assert!(cf[1..].iter().all(|q| *q == BigInt::from(2)));

        let q: SymbolicReal = "355/113".parse().unwrap();
        let (cf, term) = q.continued_fraction(20, 1e-12);
        assert!(term);
        assert_eq!(cf, vec![3, 7, 16].into_iter().map(BigInt::from).collect::<Vec<_>>());

        let neg: SymbolicReal = "-sqrt(3)".parse().unwrap();
        let (cf, _) = neg.continued_fraction(3, 1e-12);
        assert_eq!(cf[0], BigInt::from(-2));
    }

    #[test]
    fn exact_division() {
        let a: SymbolicReal = "sqrt(2)".parse().unwrap();
        let b: SymbolicReal = "1".parse().unwrap();
        assert_eq!(a.exact_div(&b).unwrap(), a);
        let c: SymbolicReal = "2*sqrt(2)".parse().unwrap();
        assert_eq!(c.exact_div(&a).unwrap().as_rational(), Some(&ExactScalar::from_int(2)));
        let d: SymbolicReal = "1+sqrt(2)".parse().unwrap();
        let e: SymbolicReal = "-1+sqrt(2)".parse().unwrap();
        // (1 + r)(r - 1) = 1
        let inv = b.exact_div(&d).unwrap();
        assert_eq!(inv, e);
    }

    #[test]
    fn extended_matches_double() {
        let r: SymbolicReal = "1/3+2*sqrt(5)".parse().unwrap();
        let tf = f64::from(r.to_twofloat());
        assert!((tf - r.to_f64_direct()).abs() < 1e-15);
    }

    #[test]
    fn surd_signs() {
        let r: SymbolicReal = "3-2*sqrt(2)".parse().unwrap();
        assert_eq!(r.signum(), 1);
        let r: SymbolicReal = "1-sqrt(2)".parse().unwrap();
        assert_eq!(r.signum(), -1);
    }
}
