use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{invalid, Error, Result};
use crate::exact_arith::{arch_precision, ArchPrecision, ExactScalar, Place, Prime, Valuation};

/// Matrix norm used at one place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Euclidean norm on the entries; real place only.
    Frobenius,
    MaxEntry,
}

impl NormKind {
    pub fn check_place(self, place: Place) -> Result<()> {
        match (self, place) {
            (NormKind::Frobenius, Place::Finite(p)) => {
                Err(invalid(format!("Frobenius norm is not defined at the finite place {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Frobenius => "frobenius",
            NormKind::MaxEntry => "max_entry",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "frobenius" | "euclidean" | "fro" => Ok(NormKind::Frobenius),
            "max_entry" | "max" | "maxentry" => Ok(NormKind::MaxEntry),
            other => Err(Error::Parse(format!("unknown norm kind '{other}'"))),
        }
    }
}

/// Value of a norm: exact when the input was exact.
#[derive(Clone, Debug, PartialEq)]
pub enum NormValue {
    Exact(ExactScalar),
    /// Square root of an exact nonnegative rational (Frobenius of a rational matrix).
    SqrtOf(ExactScalar),
    Real(f64),
}

impl NormValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Exact(x) => x.to_f64(),
            NormValue::SqrtOf(x) => x.to_f64().sqrt(),
            NormValue::Real(x) => *x,
        }
    }

    /// Exact square, when available.
    pub fn squared_exact(&self) -> Option<ExactScalar> {
        match self {
            NormValue::Exact(x) => Some(x * x),
            NormValue::SqrtOf(x) => Some(x.clone()),
            NormValue::Real(_) => None,
        }
    }

    /// Comparison that is exact whenever both sides are exact.
    pub fn cmp_value(&self, other: &NormValue) -> Ordering {
        match (self.squared_exact(), other.squared_exact()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Exact(x) => write!(f, "{x}"),
            NormValue::SqrtOf(x) => write!(f, "sqrt({x})"),
            NormValue::Real(x) => write!(f, "{x}"),
        }
    }
}

/// Ball radius `T`, held exactly through its square.
///
/// Radii like `sqrt(2)` are common (the Frobenius norm of the identity), so
/// the square is the canonical representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Radius {
    squared: ExactScalar,
}

impl Radius {
    pub fn from_squared(squared: ExactScalar) -> Result<Self> {
        if squared.signum() <= 0 {
            return Err(invalid(format!("radius squared must be positive, got {squared}")));
        }
        Ok(Radius { squared })
    }

    pub fn new(t: ExactScalar) -> Result<Self> {
        if t.signum() <= 0 {
            return Err(invalid(format!("radius must be positive, got {t}")));
        }
        Radius::from_squared(&t * &t)
    }

    pub fn from_int(t: i64) -> Result<Self> {
        Radius::new(ExactScalar::from_int(t))
    }

    /// Exact value of a double radius.
    pub fn from_f64(t: f64) -> Result<Self> {
        Radius::new(ExactScalar::from_f64(t)?)
    }

    pub fn squared(&self) -> &ExactScalar {
        &self.squared
    }

    pub fn to_f64(&self) -> f64 {
        self.squared.to_f64().sqrt()
    }

    /// `floor(T^2)`, the bound for integer sums of squares.
    pub fn floor_squared(&self) -> BigInt {
        self.squared.floor()
    }

    /// `floor(T)`, the bound for integer entries.
    pub fn floor(&self) -> BigInt {
        self.floor_squared().sqrt()
    }

    pub fn floor_i64(&self) -> Result<i64> {
        self.floor().to_i64().ok_or_else(|| invalid("radius too large"))
    }

    pub fn floor_squared_i128(&self) -> Result<i128> {
        self.floor_squared().to_i128().ok_or_else(|| invalid("radius too large"))
    }

    /// Largest `m` with `p^m <= T`; `None` when `T < 1`.
    pub fn floor_log(&self, p: Prime) -> Option<u32> {
        if self.squared < ExactScalar::one() {
            return None;
        }
        let pb = ExactScalar::from_int(p.get());
        let mut m = 0u32;
        let mut pw2 = &pb * &pb;
        while pw2 <= self.squared {
            m += 1;
            pw2 = pw2 * &pb * &pb;
        }
        Some(m)
    }

    /// Whether a norm value lies in the closed ball.
    pub fn admits(&self, v: &NormValue) -> bool {
        match v.squared_exact() {
            Some(sq) => sq <= self.squared,
            None => v.to_f64() <= self.to_f64(),
        }
    }

    pub fn scaled(&self, factor: &ExactScalar) -> Result<Radius> {
        Radius::from_squared(&self.squared * &(factor * factor))
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = self.squared.numer().abs();
        let den = self.squared.denom().clone();
        let (rn, rd) = (num.sqrt(), den.sqrt());
        if &rn * &rn == num && &rd * &rd == den {
            write!(f, "{}", ExactScalar::new(rn, rd).expect("nonzero denominator"))
        } else {
            write!(f, "sqrt({})", self.squared)
        }
    }
}

impl FromStr for Radius {
    type Err = Error;
    /// Accepts `q` (exact rational or decimal) or `sqrt(q)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return Radius::from_squared(ExactScalar::from_str(inner)?);
        }
        match ExactScalar::from_str(s) {
            Ok(t) => Radius::new(t),
            Err(_) => {
                let x: f64 = s.parse().map_err(|_| Error::Parse(format!("bad radius '{s}'")))?;
                Radius::from_f64(x)
            }
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Norm of a rational matrix at a place.
pub fn matrix_norm(m: &Matrix<ExactScalar>, place: Place, kind: NormKind) -> Result<NormValue> {
    kind.check_place(place)?;
    Ok(match (place, kind) {
        (Place::Archimedean, NormKind::Frobenius) => {
            let mut acc = ExactScalar::zero();
            for x in m.entries() {
                acc += x * x;
            }
            NormValue::SqrtOf(acc)
        }
        (Place::Archimedean, NormKind::MaxEntry) => {
            NormValue::Exact(m.entries().iter().map(|x| x.abs()).max().unwrap_or_default())
        }
        (Place::Finite(p), _) => {
            let v = m
                .entries()
                .iter()
                .map(|x| x.padic_valuation(p))
                .min()
                .unwrap_or(Valuation::PositiveInfinity);
            NormValue::Exact(match v {
                Valuation::PositiveInfinity => ExactScalar::zero(),
                Valuation::Finite(v) => ExactScalar::prime_power(p, -v),
            })
        }
    })
}

/// Frobenius norm of a real matrix at the configured precision.
pub fn frobenius_f64(m: &Matrix<f64>) -> f64 {
    match arch_precision() {
        ArchPrecision::Double => m.entries().iter().map(|x| x * x).sum::<f64>().sqrt(),
        ArchPrecision::Extended => {
            let mut acc = twofloat::TwoFloat::from(0.0);
            for &x in m.entries() {
                acc += twofloat::TwoFloat::new_mul(x, x);
            }
            f64::from(acc.sqrt())
        }
    }
}

pub fn max_entry_norm_f64(m: &Matrix<f64>) -> f64 {
    m.entries().iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}
