//! Exhaustive enumeration of lattice balls `Gamma_T` in `SL(2, Z)`,
//! `SL(2, Z[1/p])` and `SL(n, Z)`.
//!
//! Each enumerator is split into independent work units visited in a fixed
//! order, so a sequential walk is deterministic and a parallel fold merges
//! the same per-unit results.

mod sl2;
mod sln;
mod strip;
mod window;

pub use strip::{StripBall, StripQuery};
pub use window::{sl_order_mod_prime_power, CongruenceWindow};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::exact_arith::{ExactScalar, Place, Prime};
use crate::linalg::{IntMatrix, Matrix, NormKind, PlacedMatrix, Radius, MAX_DIM};

/// Default limit on the predicted number of ball elements.
pub const DEFAULT_CAPACITY: u64 = 100_000_000;

/// The lattice being enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lattice {
    Sl2Z,
    /// `SL(2, Z[1/p])`.
    Sl2ZInvP(Prime),
    SlnZ(usize),
}

impl Lattice {
    pub fn dim(self) -> usize {
        match self {
            Lattice::Sl2Z | Lattice::Sl2ZInvP(_) => 2,
            Lattice::SlnZ(n) => n,
        }
    }

    pub fn prime(self) -> Option<Prime> {
        match self {
            Lattice::Sl2ZInvP(p) => Some(p),
            _ => None,
        }
    }
}

/// A ball `{gamma : |gamma|_inf <= T_inf, |gamma|_p <= T_p}`, optionally
/// intersected with a congruence window at `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub lattice: Lattice,
    pub t_inf: Radius,
    /// Bound at the finite place; defaults to `t_inf`.
    pub t_p: Option<Radius>,
    pub real_norm: NormKind,
    pub window: Option<CongruenceWindow>,
    pub capacity: u64,
}

impl BallSpec {
    pub fn sl2z(t: Radius, real_norm: NormKind) -> Self {
        BallSpec { lattice: Lattice::Sl2Z, t_inf: t, t_p: None, real_norm, window: None, capacity: DEFAULT_CAPACITY }
    }

    pub fn sl2_zinvp(p: Prime, t_inf: Radius, t_p: Radius, real_norm: NormKind) -> Self {
        BallSpec {
            lattice: Lattice::Sl2ZInvP(p),
            t_inf,
            t_p: Some(t_p),
            real_norm,
            window: None,
            capacity: DEFAULT_CAPACITY,
        }
    }

    pub fn slnz(n: usize, t: Radius, real_norm: NormKind) -> Self {
        BallSpec { lattice: Lattice::SlnZ(n), t_inf: t, t_p: None, real_norm, window: None, capacity: DEFAULT_CAPACITY }
    }

    pub fn with_window(mut self, w: CongruenceWindow) -> Self {
        self.window = Some(w);
        self
    }

    pub fn with_capacity(mut self, capacity: u64) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn t_p(&self) -> &Radius {
        self.t_p.as_ref().unwrap_or(&self.t_inf)
    }

    /// Largest level `m` (so `|gamma|_p = p^m`) inside the ball.
    pub fn max_level(&self) -> u32 {
        match self.lattice.prime() {
            Some(p) => self.t_p().floor_log(p).unwrap_or(0),
            None => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lattice.dim();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(invalid(format!("matrix size {n} outside 2..={MAX_DIM}")));
        }
        if *self.t_inf.squared() < ExactScalar::one() || *self.t_p().squared() < ExactScalar::one() {
            return Err(invalid("ball radii must be at least 1"));
        }
        if let Some(w) = &self.window {
            match self.lattice.prime() {
                Some(p) if p == w.prime() && w.dim() == n => {}
                _ => return Err(invalid("a congruence window needs a matching finite place")),
            }
        }
        Ok(())
    }

    /// Rough prediction of the ball size, used for the capacity check.
    pub fn predicted_count(&self) -> f64 {
        let n = self.lattice.dim();
        let t = self.t_inf.to_f64();
        let t_frob = match self.real_norm {
            NormKind::Frobenius => t,
            NormKind::MaxEntry => t * (n as f64).sqrt(),
        };
        // Leading constants of #{gamma in SL(n,Z) : |gamma|_F <= T} ~ c_n T^(n^2-n).
        let c = match n {
            2 => 6.0,
            3 => 16.4,
            _ => 60.0,
        };
        let base = c * t_frob.powi((n * n - n) as i32);
        match self.lattice.prime() {
            None => base,
            Some(p) => {
                let p = p.get() as f64;
                (0..=self.max_level())
                    .map(|m| if m == 0 { base } else { base * p.powi(2 * m as i32 - 1) * (p + 1.0) })
                    .sum()
            }
        }
    }

    pub fn check_capacity(&self) -> Result<()> {
        let predicted = self.predicted_count();
        if predicted > self.capacity as f64 {
            return Err(Error::Capacity { predicted: predicted.min(u64::MAX as f64) as u64, limit: self.capacity });
        }
        Ok(())
    }
}

/// `gamma = p^(-level) * matrix`, with `matrix` primitive when `level > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub level: u32,
    pub matrix: IntMatrix,
}

impl GroupElement {
    pub fn integral(matrix: IntMatrix) -> Self {
        GroupElement { level: 0, matrix }
    }

    pub fn to_exact(&self, p: Option<Prime>) -> Matrix<ExactScalar> {
        match (self.level, p) {
            (0, _) => self.matrix.to_exact(),
            (l, Some(p)) => self.matrix.to_exact_scaled(p, l),
            (_, None) => panic!("positive level without a prime"),
        }
    }

    pub fn to_placed(&self, p: Option<Prime>) -> Result<PlacedMatrix> {
        let mut places = vec![Place::Archimedean];
        places.extend(p.map(Place::Finite));
        PlacedMatrix::diagonal(&self.to_exact(p), &places)
    }

    /// `gamma * v` for a real vector.
    pub fn act_real(&self, v: &[f64], p: Option<Prime>) -> Vec<f64> {
        let n = self.matrix.dim();
        let scale = match p {
            Some(p) if self.level > 0 => (p.get() as f64).powi(-(self.level as i32)),
            _ => 1.0,
        };
        (0..n)
            .map(|i| self.matrix.row(i).iter().zip(v).map(|(&a, &x)| a as f64 * x).sum::<f64>() * scale)
            .collect()
    }
}

/// One independent slice of an enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct WorkUnit {
    pub level: u32,
    /// Value of the outermost loop variable.
    pub lead: i64,
}

/// A validated ball ready to be walked.
#[derive(Clone, Debug)]
pub struct Ball {
    spec: BallSpec,
    levels: Vec<sl2::LevelBounds>,
}

impl Ball {
    pub fn new(spec: BallSpec) -> Result<Self> {
        spec.validate()?;
        spec.check_capacity()?;
        let levels = match spec.lattice {
            Lattice::SlnZ(_) => vec![sl2::LevelBounds::new(&spec, 0)?],
            _ => (0..=spec.max_level()).map(|m| sl2::LevelBounds::new(&spec, m)).collect::<Result<_>>()?,
        };
        Ok(Ball { spec, levels })
    }

    pub fn spec(&self) -> &BallSpec {
        &self.spec
    }

    pub(crate) fn units(&self) -> Vec<WorkUnit> {
        let mut out = Vec::new();
        for lb in &self.levels {
            let lead = lb.lead_bound();
            out.extend((-lead..=lead).map(|a| WorkUnit { level: lb.level, lead: a }));
        }
        out
    }

    fn visit_unit(&self, unit: WorkUnit, f: &mut dyn FnMut(&GroupElement)) {
        let lb = &self.levels.iter().find(|l| l.level == unit.level).expect("unit level exists");
        let mut emit = |g: &GroupElement| {
            if self.spec.window.as_ref().is_none_or(|w| w.contains(g)) {
                f(g)
            }
        };
        match self.spec.lattice {
            Lattice::SlnZ(n) => sln::visit_first_entry(n, lb, unit.lead, &mut emit),
            _ => sl2::visit_column(lb, unit.lead, &mut emit),
        }
    }

    /// Visit every element in the deterministic order.
    pub fn for_each(&self, mut f: impl FnMut(&GroupElement)) {
        for u in self.units() {
            self.visit_unit(u, &mut f);
        }
    }

    pub fn collect(&self) -> Vec<GroupElement> {
        let mut out = Vec::new();
        self.for_each(|g| out.push(*g));
        out
    }

    pub fn count(&self) -> u64 {
        self.par_fold(|| 0u64, |acc, _| acc + 1, |a, b| a + b)
    }

    /// Fold over the ball in parallel; `reduce` must be associative.
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
                self.visit_unit(u, &mut |g| acc = Some(fold(acc.take().expect("accumulator present"), g)));
                acc.expect("accumulator present")
            })
            .reduce(&init, &reduce)
    }
}

/// `{gamma in SL(2, Z) : |gamma|_inf <= T}`.
pub fn enum_sl2z(spec: &BallSpec) -> Result<Vec<IntMatrix>> {
    if spec.lattice != Lattice::Sl2Z {
        return Err(invalid("enum_sl2z needs the SL(2, Z) lattice"));
    }
    Ok(Ball::new(spec.clone())?.collect().into_iter().map(|g| g.matrix).collect())
}

/// `{gamma in SL(2, Z[1/p]) : |gamma|_inf <= T_inf, |gamma|_p <= T_p}`.
pub fn enum_sl2_zinvp(spec: &BallSpec) -> Result<Vec<GroupElement>> {
    if !matches!(spec.lattice, Lattice::Sl2ZInvP(_)) {
        return Err(invalid("enum_sl2_zinvp needs the SL(2, Z[1/p]) lattice"));
    }
    Ok(Ball::new(spec.clone())?.collect())
}

/// `{gamma in SL(n, Z) : |gamma| <= T}`.
pub fn enum_slnz(spec: &BallSpec) -> Result<Vec<IntMatrix>> {
    if !matches!(spec.lattice, Lattice::SlnZ(_)) {
        return Err(invalid("enum_slnz needs the SL(n, Z) lattice"));
    }
    Ok(Ball::new(spec.clone())?.collect().into_iter().map(|g| g.matrix).collect())
}

/// Keep the p-integral elements lying in the window.
pub fn filter_window(seq: &[GroupElement], window: &CongruenceWindow) -> Vec<GroupElement> {
    seq.iter().filter(|g| window.contains(g)).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        let p = Prime::new(2).unwrap();
        let r = Radius::from_int(3).unwrap();
        assert!(BallSpec::sl2z(r.clone(), NormKind::Frobenius).validate().is_ok());
        let w = CongruenceWindow::principal(p, 1, 2).unwrap();
        assert!(BallSpec::sl2z(r.clone(), NormKind::Frobenius).with_window(w.clone()).validate().is_err());
        let s = BallSpec::sl2_zinvp(p, r.clone(), Radius::from_int(1).unwrap(), NormKind::Frobenius).with_window(w);
        assert!(s.validate().is_ok());
        assert!(BallSpec::sl2z("1/2".parse().unwrap(), NormKind::MaxEntry).validate().is_err());
        assert!(BallSpec::slnz(5, r, NormKind::MaxEntry).validate().is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let spec = BallSpec::sl2z(Radius::from_int(10_000).unwrap(), NormKind::Frobenius).with_capacity(1000);
        match Ball::new(spec) {
            Err(Error::Capacity { limit, .. }) => assert_eq!(limit, 1000),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn window_filter() {
        let p = Prime::new(2).unwrap();
        let w = CongruenceWindow::principal(p, 1, 2).unwrap();
        let seq = [
            GroupElement::integral(IntMatrix::identity(2)),
            GroupElement::integral(IntMatrix::sl2(1, 1, 0, 1)),
            GroupElement { level: 1, matrix: IntMatrix::sl2(4, 0, 0, 1) },
        ];
        assert_eq!(filter_window(&seq, &w), vec![seq[0]]);
        assert_eq!(filter_window(&seq, &CongruenceWindow::full(p, 2)), seq[..2].to_vec());
    }
}
