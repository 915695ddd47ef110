//! Exact rational scalars, places of Q and their absolute values.
//!
//! Every computation at a finite place goes through [`ExactScalar`]; the
//! p-adic absolute value of a rational is returned as the exact rational
//! `p^(-v_p(x))`, so ball membership at finite places never touches floats.

mod precision;
mod real;

pub use precision::{arch_precision, set_arch_precision, ArchPrecision};
pub use real::SymbolicReal;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An arbitrary-precision rational in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d: BigInt = denom.into();
        if d.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(ExactScalar(BigRational::new(numer.into(), d)))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        ExactScalar(BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(r: BigRational) -> Self {
        ExactScalar(r)
    }

    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        ExactScalar(self.0.abs())
    }

    pub fn signum(&self) -> i32 {
        match self.0.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("reciprocal of zero".into()));
        }
        Ok(ExactScalar(self.0.recip()))
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.recip()?.pow(-e);
        }
        let e = u32::try_from(e).map_err(|_| Error::InvalidArgument("exponent too large".into()))?;
        Ok(ExactScalar(num_traits::pow(self.0.clone(), e as usize)))
    }

    /// `p^e` for a prime (or any integer) base.
    pub fn prime_power(p: Prime, e: i64) -> Self {
        let base = ExactScalar::from_int(p.get());
        base.pow(e).expect("nonzero base")
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        // Ratio::to_f64 handles huge numerators/denominators without overflow.
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact conversion of a finite double (every finite f64 is a dyadic rational).
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(ExactScalar)
            .ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
    }

    pub fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    /// `v_p(x)`: the exponent with `x = p^v * u`, `u` a p-unit.
    pub fn padic_valuation(&self, p: Prime) -> Valuation {
        if self.is_zero() {
            return Valuation::PositiveInfinity;
        }
        Valuation::Finite(int_valuation(self.numer(), p) - int_valuation(self.denom(), p))
    }

    pub fn is_p_integral(&self, p: Prime) -> bool {
        self.padic_valuation(p) >= Valuation::Finite(0)
    }

    /// `|x|_p` as an exact rational; zero maps to zero.
    pub fn padic_abs(&self, p: Prime) -> ExactScalar {
        match self.padic_valuation(p) {
            Valuation::PositiveInfinity => ExactScalar::zero(),
            Valuation::Finite(v) => ExactScalar::prime_power(p, -v),
        }
    }

    pub fn abs_at_place(&self, place: Place) -> PlaceAbs {
        match place {
            Place::Archimedean => PlaceAbs::Archimedean(self.abs()),
            Place::Finite(p) => PlaceAbs::Finite(self.padic_abs(p)),
        }
    }

    /// Unit part `x / p^v_p(x)` (zero stays zero).
    pub fn padic_unit_part(&self, p: Prime) -> ExactScalar {
        match self.padic_valuation(p) {
            Valuation::PositiveInfinity => ExactScalar::zero(),
            Valuation::Finite(v) => self * &ExactScalar::prime_power(p, -v),
        }
    }

    /// Reduction of a p-integral rational modulo `p^m`, as a residue in `[0, p^m)`.
    pub fn residue_mod_prime_power(&self, p: Prime, m: u32) -> Option<BigInt> {
        if !self.is_p_integral(p) {
            return None;
        }
        let modulus = BigInt::from(p.get()).pow(m);
        if modulus.is_one() {
            return Some(BigInt::zero());
        }
        let den_inv = mod_inverse(&self.denom().mod_floor(&modulus), &modulus)?;
        Some((self.numer() * den_inv).mod_floor(&modulus))
    }
}

fn int_valuation(n: &BigInt, p: Prime) -> i64 {
    let pb = BigInt::from(p.get());
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// Inverse of `a` modulo `m` when `gcd(a, m) = 1`.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    /// Accepts `a`, `a/b` and finite decimals such as `-1.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            return ExactScalar::new(n, d).map_err(|_| bad());
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = int.starts_with('-');
            let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
            let n: BigInt = digits.parse().map_err(|_| bad())?;
            let d = BigInt::from(10u32).pow(frac.len() as u32);
            let q = ExactScalar::new(n, d).map_err(|_| bad())?;
            return Ok(if neg { -q } else { q });
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(ExactScalar::from_int(n))
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar($tr::$method(&self.0, &rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar($tr::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for ExactScalar {
    type Output = ExactScalar;
    /// Panics on division by zero, like the integer types.
    fn div(self, rhs: ExactScalar) -> ExactScalar {
        ExactScalar(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &'a ExactScalar) -> ExactScalar {
        ExactScalar(&self.0 / &rhs.0)
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, rhs: ExactScalar) {
        self.0 += rhs.0;
    }
}

impl SubAssign for ExactScalar {
    fn sub_assign(&mut self, rhs: ExactScalar) {
        self.0 -= rhs.0;
    }
}

impl MulAssign for ExactScalar {
    fn mul_assign(&mut self, rhs: ExactScalar) {
        self.0 *= rhs.0;
    }
}

impl Zero for ExactScalar {
    fn zero() -> Self {
        ExactScalar::zero()
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for ExactScalar {
    fn one() -> Self {
        ExactScalar::one()
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::from_int(n)
    }
}

impl From<i128> for ExactScalar {
    fn from(n: i128) -> Self {
        ExactScalar::from_int(n)
    }
}

/// A prime number, checked at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 2 && primal_check::miller_rabin(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_i64(self) -> i64 {
        self.0 as i64
    }

    /// `p^e` as an `i128`, `None` on overflow.
    pub fn pow_i128(self, e: u32) -> Option<i128> {
        (self.0 as i128).checked_pow(e)
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A place of Q: the real absolute value or a p-adic one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    Archimedean,
    Finite(Prime),
}

impl Place {
    pub fn finite(p: u64) -> Result<Place> {
        Ok(Place::Finite(Prime::new(p)?))
    }

    pub fn prime(self) -> Option<Prime> {
        match self {
            Place::Archimedean => None,
            Place::Finite(p) => Some(p),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Archimedean => write!(f, "inf"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

/// A p-adic valuation; zero has valuation `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(i64),
    PositiveInfinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::PositiveInfinity => None,
        }
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
            (Valuation::Finite(_), Valuation::PositiveInfinity) => Ordering::Less,
            (Valuation::PositiveInfinity, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::PositiveInfinity, Valuation::PositiveInfinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Absolute value at a place. Both variants are exact for rational input;
/// the archimedean one converts to the configured precision on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlaceAbs {
    Archimedean(ExactScalar),
    Finite(ExactScalar),
}

impl PlaceAbs {
    pub fn exact(&self) -> &ExactScalar {
        match self {
            PlaceAbs::Archimedean(x) | PlaceAbs::Finite(x) => x,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.exact().to_f64()
    }
}

/// `v_p(n)` for a nonzero machine integer; `None` for zero.
pub fn valuation_i128(mut n: i128, p: Prime) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let p = p.get() as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Some(v)
}

/// Inverse of `a` modulo `m` for machine integers, when it exists.
pub fn mod_inverse_i128(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let e = a.rem_euclid(m).extended_gcd(&m);
    (e.gcd == 1).then(|| e.x.rem_euclid(m))
}

/// Largest `m >= 0` with `p^m <= t`, for an exact positive bound `t >= 1`.
pub fn floor_log(p: Prime, t: &ExactScalar) -> Option<u32> {
    if *t < ExactScalar::one() {
        return None;
    }
    let pb = ExactScalar::from_int(p.get());
    let mut m = 0u32;
    let mut pw = pb.clone();
    while pw <= *t {
        m += 1;
        pw = pw * &pb;
    }
    Some(m)
}
