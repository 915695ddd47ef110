//! Haar volumes of norm balls in one-parameter unipotent subgroups, their
//! translates, and asymptotic fits of volume growth.

pub(crate) mod fit;
mod padic_ball;
mod ratio;
mod sublevel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fit::{fit_asymptotics, AsymptoticProfile, ClassFit, FitOptions, ModulusTrial};
pub use padic_ball::padic_sl2_ball_volume;
pub use ratio::{skew_ball_ratio_limit, ClassLimit, LadderOptions, RatioLimit};
pub use sublevel::{padic_sublevel_measure, real_sublevel_measure, ExactPoly};

use crate::error::{invalid, Error, Result};
use crate::exact_arith::{ExactScalar, Prime};
use crate::linalg::{frobenius_f64, Matrix, NormKind, PlacedMatrix, Radius, RealMatrix};

/// A volume, exact as `mantissa * sqrt(p)^k` when possible.
///
/// Exact values are normalized so that `k` is 0 or 1.
#[derive(Clone, Debug, PartialEq)]
pub enum VolumeValue {
    Exact { mantissa: ExactScalar, p: Prime, sqrt_exp: u8 },
    Real(f64),
}

impl VolumeValue {
    pub fn exact(mantissa: ExactScalar, p: Prime, sqrt_exp: i64) -> Self {
        let half = sqrt_exp.div_euclid(2);
        let rest = sqrt_exp.rem_euclid(2) as u8;
        VolumeValue::Exact { mantissa: mantissa * ExactScalar::prime_power(p, half), p, sqrt_exp: rest }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            VolumeValue::Exact { mantissa, p, sqrt_exp } => {
                mantissa.to_f64() * (p.get() as f64).sqrt().powi(*sqrt_exp as i32)
            }
            VolumeValue::Real(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, VolumeValue::Exact { .. })
    }

    /// Quotient, exact when both sides are exact over the same prime.
    pub fn ratio(&self, other: &VolumeValue) -> Result<VolumeValue> {
        match (self, other) {
            (
                VolumeValue::Exact { mantissa: a, p, sqrt_exp: ka },
                VolumeValue::Exact { mantissa: b, p: q, sqrt_exp: kb },
            ) if p == q => {
                if b.is_zero() {
                    return Err(invalid("ratio by a zero volume"));
                }
                Ok(VolumeValue::exact(a.clone() / b.clone(), *p, *ka as i64 - *kb as i64))
            }
            _ => {
                let d = other.to_f64();
                if d == 0.0 {
                    return Err(invalid("ratio by a zero volume"));
                }
                Ok(VolumeValue::Real(self.to_f64() / d))
            }
        }
    }
}

impl fmt::Display for VolumeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeValue::Exact { mantissa, p, sqrt_exp } => write!(f, "{mantissa}*sqrt({p})^{sqrt_exp}"),
            VolumeValue::Real(x) => write!(f, "{x:e}"),
        }
    }
}

impl FromStr for VolumeValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((m, rest)) = s.split_once("*sqrt(") {
            let (p, k) = rest
                .split_once(")^")
                .ok_or_else(|| Error::Parse(format!("bad exact volume {s:?}")))?;
            let p: u64 = p.parse().map_err(|_| Error::Parse(format!("bad prime in {s:?}")))?;
            let k: i64 = k.parse().map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            return Ok(VolumeValue::exact(m.parse()?, Prime::new(p)?, k));
        }
        s.parse::<f64>()
            .map(VolumeValue::Real)
            .map_err(|_| Error::Parse(format!("bad volume {s:?}")))
    }
}

impl Serialize for VolumeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            VolumeValue::Exact { .. } => s.serialize_str(&self.to_string()),
            VolumeValue::Real(x) => s.serialize_f64(*x),
        }
    }
}

/// Whether the ball is translated as `{h : |h g| <= t}` or `{h : |h g^-1| <= t}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Right,
    RightInverse,
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Orientation::Right),
            "right_inverse" => Ok(Orientation::RightInverse),
            _ => Err(Error::Parse(format!("unknown orientation {s:?}"))),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Right => "right",
            Orientation::RightInverse => "right_inverse",
        })
    }
}

/// One-parameter unipotent subgroups with a fixed Haar measure.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupDescriptor {
    /// `{I + s v (Jv)^T : s in R}` in `SL(2, R)`, the stabilizer of `v`;
    /// Haar measure `ds`.
    Stab2 { v: [f64; 2], norm: NormKind },
    /// `{exp(s(E12 + E23))}` in `SL(3)` over `R x Q_p`, the image of the
    /// principal `SL(2)` unipotent, with max-entry norms. The real norm is taken
    /// in the basis `diag(1, 1/sqrt 2, 1)`; the real Haar measure is `ds/2`.
    Sym2Unipotent { p: Prime },
    /// Product of vector stabilizers in `SL(2, R) x SL(2, Q_p)`; real norm as
    /// given, max-entry at `p`, Haar measure `ds` at both places.
    UniPair { p: Prime, v_real: [f64; 2], v_padic: [ExactScalar; 2], real_norm: NormKind },
}

impl GroupDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            GroupDescriptor::Sym2Unipotent { .. } => 3,
            _ => 2,
        }
    }

    pub fn prime(&self) -> Option<Prime> {
        match self {
            GroupDescriptor::Stab2 { .. } => None,
            GroupDescriptor::Sym2Unipotent { p } | GroupDescriptor::UniPair { p, .. } => Some(*p),
        }
    }

    /// The identity at every place the group lives on.
    pub fn identity(&self) -> PlacedMatrix {
        let n = self.dim();
        let mut finite = std::collections::BTreeMap::new();
        if let Some(p) = self.prime() {
            finite.insert(p, Matrix::<ExactScalar>::identity(n));
        }
        PlacedMatrix::new(n, Some(RealMatrix::Exact(Matrix::identity(n))), finite)
            .expect("identity has consistent shape")
    }

    fn validate(&self) -> Result<()> {
        let nonzero = |v: &[f64; 2]| v.iter().all(|x| x.is_finite()) && v.iter().any(|&x| x != 0.0);
        match self {
            GroupDescriptor::Stab2 { v, .. } if !nonzero(v) => Err(invalid("stabilized vector must be nonzero")),
            GroupDescriptor::UniPair { v_real, v_padic, .. } => {
                if !nonzero(v_real) || v_padic.iter().all(|x| x.is_zero()) {
                    Err(invalid("stabilized vectors must be nonzero"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// The translated ball `H_t(g)` whose volume is requested.
#[derive(Clone, Debug)]
pub struct SkewBallQuery {
    pub group: GroupDescriptor,
    pub translator: PlacedMatrix,
    pub t: Radius,
    pub orientation: Orientation,
}

impl SkewBallQuery {
    pub fn plain(group: GroupDescriptor, t: Radius) -> Self {
        let translator = group.identity();
        SkewBallQuery { group, translator, t, orientation: Orientation::Right }
    }
}

/// `vol{h in Stab(v) : |h|_F <= t}` with Haar measure `ds`.
pub fn stab_ball_volume_sl2r(v: [f64; 2], t: f64) -> f64 {
    let n2 = v[0] * v[0] + v[1] * v[1];
    if t * t <= 2.0 {
        return 0.0;
    }
    2.0 * (t * t - 2.0).sqrt() / n2
}

/// Default translator for the `Sym2Unipotent` family: identity at the real place
/// and `diag(p, 1, 1/p)` at `p`.
pub fn sym2_translator(p: Prime) -> PlacedMatrix {
    let pe = ExactScalar::from_int(p.get());
    let d = Matrix::diagonal(&[pe.clone(), ExactScalar::one(), pe.recip().expect("p is nonzero")]);
    let mut finite = std::collections::BTreeMap::new();
    finite.insert(p, d);
    PlacedMatrix::new(3, Some(RealMatrix::Exact(Matrix::identity(3))), finite).expect("3x3")
}

/// Haar volume of `H_t(g)`.
pub fn skew_ball_volume(q: &SkewBallQuery) -> Result<VolumeValue> {
    q.group.validate()?;
    let n = q.group.dim();
    if q.translator.dim() != n {
        return Err(invalid(format!("translator must be {n}x{n}")));
    }
    let real = q
        .translator
        .real()
        .ok_or_else(|| invalid("translator needs a real component"))?
        .to_f64();
    let real = oriented_f64(&real, q.orientation)?;
    let t = q.t.to_f64();
    match &q.group {
        GroupDescriptor::Stab2 { v, norm } => {
            if q.translator.places().len() != 1 {
                return Err(invalid("Stab2 lives at the real place only"));
            }
            Ok(VolumeValue::Real(stab_real_mass(*v, &real, *norm, t)?))
        }
        GroupDescriptor::Sym2Unipotent { p } => {
            let gp = padic_component(q, *p)?;
            let padic = padic_mass(*p, &sym2_padic_polys(&gp), &q.t)?;
            let is_identity = matches!(q.translator.real(), Some(RealMatrix::Exact(m)) if *m == Matrix::identity(3));
            if is_identity {
                if let Some(k) = exact_power(*p, &q.t).filter(|&k| k >= 1) {
                    // sqrt(t) = sqrt(p)^k once t >= 2.
                    return Ok(VolumeValue::exact(padic, *p, k));
                }
            }
            let real_mass = real_sublevel_measure(&sym2_real_polys(&real), t)? / 2.0;
            Ok(VolumeValue::Real(real_mass * padic.to_f64()))
        }
        GroupDescriptor::UniPair { p, v_real, v_padic, real_norm } => {
            let gp = padic_component(q, *p)?;
            let padic = padic_mass(*p, &stab_padic_polys(v_padic, &gp), &q.t)?;
            if padic.is_zero() {
                return Ok(VolumeValue::Real(0.0));
            }
            Ok(VolumeValue::Real(stab_real_mass(*v_real, &real, *real_norm, t)? * padic.to_f64()))
        }
    }
}

fn oriented_f64(g: &Matrix<f64>, o: Orientation) -> Result<Matrix<f64>> {
    match o {
        Orientation::Right => Ok(g.clone()),
        Orientation::RightInverse => g.inverse(),
    }
}

fn padic_component(q: &SkewBallQuery, p: Prime) -> Result<Matrix<ExactScalar>> {
    let g = q
        .translator
        .at_prime(p)
        .ok_or_else(|| invalid(format!("translator needs a component at {p}")))?;
    if q.translator.places().len() != 2 {
        return Err(invalid(format!("translator must live exactly at the real place and {p}")));
    }
    match q.orientation {
        Orientation::Right => Ok(g.clone()),
        Orientation::RightInverse => g.inverse(),
    }
}

/// `n` with `t = p^n` exactly.
fn exact_power(p: Prime, t: &Radius) -> Option<i64> {
    let n = padic_exponent(p, t);
    (ExactScalar::prime_power(p, 2 * n) == *t.squared()).then_some(n)
}

/// Largest `n` (possibly negative) with `p^n <= t`.
pub(crate) fn padic_exponent(p: Prime, t: &Radius) -> i64 {
    let t2 = t.squared();
    let mut n = 0i64;
    while ExactScalar::prime_power(p, 2 * n) > *t2 {
        n -= 1;
    }
    while ExactScalar::prime_power(p, 2 * (n + 1)) <= *t2 {
        n += 1;
    }
    n
}

fn padic_mass(p: Prime, polys: &[ExactPoly], t: &Radius) -> Result<ExactScalar> {
    padic_sublevel_measure(p, polys, padic_exponent(p, t))
}

/// `N = v (Jv)^T` with `J` the rotation by a quarter turn.
fn stab_nilpotent(v: [f64; 2]) -> Matrix<f64> {
    let u = [-v[1], v[0]];
    Matrix::from_fn(2, 2, |i, j| v[i] * u[j])
}

/// Mass of `{s : |(I + sN) g| <= t}`.
fn stab_real_mass(v: [f64; 2], g: &Matrix<f64>, norm: NormKind, t: f64) -> Result<f64> {
    let ng = stab_nilpotent(v).matmul(g)?;
    match norm {
        NormKind::Frobenius => {
            let a = frobenius_f64(&ng).powi(2);
            let b: f64 = g.entries().iter().zip(ng.entries()).map(|(x, y)| x * y).sum();
            let c = frobenius_f64(g).powi(2);
            let disc = b * b - a * (c - t * t);
            Ok(if disc <= 0.0 { 0.0 } else { 2.0 * disc.sqrt() / a })
        }
        NormKind::MaxEntry => {
            let polys: Vec<Vec<f64>> =
                g.entries().iter().zip(ng.entries()).map(|(&x, &y)| vec![x, y]).collect();
            real_sublevel_measure(&polys, t)
        }
    }
}

fn stab_padic_polys(v: &[ExactScalar; 2], g: &Matrix<ExactScalar>) -> Vec<ExactPoly> {
    let u = [-v[1].clone(), v[0].clone()];
    let n = Matrix::from_fn(2, 2, |i, j| &v[i] * &u[j]);
    let ng = n.matmul(g).expect("2x2");
    g.entries()
        .iter()
        .zip(ng.entries())
        .map(|(x, y)| vec![x.clone(), y.clone()])
        .collect()
}

/// Entries of `h(s) g` as polynomials in `s`, for
/// `h(s) = [[1, 2s, s^2], [0, 1, s], [0, 0, 1]]`.
fn sym2_exact_polys(g: &Matrix<ExactScalar>) -> Vec<ExactPoly> {
    let two = ExactScalar::from_int(2);
    let mut out = Vec::with_capacity(9);
    for j in 0..3 {
        let (g0, g1, g2) = (&g[(0, j)], &g[(1, j)], &g[(2, j)]);
        out.push(vec![g0.clone(), &two * g1, g2.clone()]);
        out.push(vec![g1.clone(), g2.clone()]);
        out.push(vec![g2.clone()]);
    }
    out
}

fn sym2_padic_polys(g: &Matrix<ExactScalar>) -> Vec<ExactPoly> {
    sym2_exact_polys(g)
}

/// Entries of `D^-1 h(s) g D` with `D = diag(1, 1/sqrt 2, 1)`.
fn sym2_real_polys(g: &Matrix<f64>) -> Vec<Vec<f64>> {
    let d = [1.0, std::f64::consts::FRAC_1_SQRT_2, 1.0];
    let mut out = Vec::with_capacity(9);
    for j in 0..3 {
        let (g0, g1, g2) = (g[(0, j)], g[(1, j)], g[(2, j)]);
        let rows = [vec![g0, 2.0 * g1, g2], vec![g1, g2], vec![g2]];
        for (i, poly) in rows.into_iter().enumerate() {
            let scale = d[j] / d[i];
            out.push(poly.into_iter().map(|c| c * scale).collect());
        }
    }
    out
}

/// Smallest and largest `vol H_t(g) / vol H_t` over a ladder of radii.
pub fn bounded_ratio_check(
    group: &GroupDescriptor,
    g: &PlacedMatrix,
    orientation: Orientation,
    ladder: &[Radius],
) -> Result<(f64, f64)> {
    if ladder.is_empty() {
        return Err(invalid("empty ladder"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in ladder {
        let r = translated_ratio(group, g, orientation, t)?.to_f64();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// `vol H_t(g) / vol H_t`.
pub fn translated_ratio(
    group: &GroupDescriptor,
    g: &PlacedMatrix,
    orientation: Orientation,
    t: &Radius,
) -> Result<VolumeValue> {
    let skew = skew_ball_volume(&SkewBallQuery {
        group: group.clone(),
        translator: g.clone(),
        t: t.clone(),
        orientation,
    })?;
    let plain = skew_ball_volume(&SkewBallQuery::plain(group.clone(), t.clone()))?;
    skew.ratio(&plain)
}

/// Limit of `vol H_t(g) / vol H_t` for vector stabilizers under the
/// Frobenius norm: `|N|_F / |N g'|_F` with `g' = g` or `g^-1`.
pub fn stab_ratio_closed_form(v: [f64; 2], g: &Matrix<f64>, orientation: Orientation) -> Result<f64> {
    let g = oriented_f64(g, orientation)?;
    let n = stab_nilpotent(v);
    Ok(frobenius_f64(&n) / frobenius_f64(&n.matmul(&g)?))
}
