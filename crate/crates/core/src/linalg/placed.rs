use std::collections::BTreeMap;

use super::norm::{frobenius_f64, matrix_norm, max_entry_norm_f64, NormKind, NormValue};
use super::Matrix;
use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Place, Prime};

/// Real-place matrix: exact rationals where possible, floats otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum RealMatrix {
    Exact(Matrix<ExactScalar>),
    Float(Matrix<f64>),
}

impl RealMatrix {
    pub fn dim(&self) -> usize {
        match self {
            RealMatrix::Exact(m) => m.rows(),
            RealMatrix::Float(m) => m.rows(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        match self {
            RealMatrix::Exact(m) => m.to_f64(),
            RealMatrix::Float(m) => m.clone(),
        }
    }

    pub fn norm(&self, kind: NormKind) -> NormValue {
        match self {
            RealMatrix::Exact(m) => {
                matrix_norm(m, Place::Archimedean, kind).expect("every norm is valid at the real place")
            }
            RealMatrix::Float(m) => NormValue::Real(match kind {
                NormKind::Frobenius => frobenius_f64(m),
                NormKind::MaxEntry => max_entry_norm_f64(m),
            }),
        }
    }
}

/// Real-place vector.
#[derive(Clone, Debug, PartialEq)]
pub enum RealVector {
    Exact(Vec<ExactScalar>),
    Float(Vec<f64>),
}

impl RealVector {
    pub fn len(&self) -> usize {
        match self {
            RealVector::Exact(v) => v.len(),
            RealVector::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            RealVector::Exact(v) => v.iter().map(|x| x.to_f64()).collect(),
            RealVector::Float(v) => v.clone(),
        }
    }
}

/// An element of `prod_{v in S} GL(n, Q_v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedMatrix {
    n: usize,
    real: Option<RealMatrix>,
    finite: BTreeMap<Prime, Matrix<ExactScalar>>,
}

impl PlacedMatrix {
    pub fn new(
        n: usize,
        real: Option<RealMatrix>,
        finite: BTreeMap<Prime, Matrix<ExactScalar>>,
    ) -> Result<Self> {
        let dims_ok = real.iter().all(|r| r.dim() == n)
            && finite.values().all(|m| m.rows() == n && m.cols() == n)
            && match &real {
                Some(RealMatrix::Exact(m)) => m.cols() == n,
                Some(RealMatrix::Float(m)) => m.cols() == n,
                None => true,
            };
        if !dims_ok {
            return Err(invalid(format!("placed matrix components must all be {n}x{n}")));
        }
        Ok(PlacedMatrix { n, real, finite })
    }

    /// Diagonal embedding of a rational matrix at the given places.
    pub fn diagonal(m: &Matrix<ExactScalar>, places: &[Place]) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid("placed matrices are square"));
        }
        let mut real = None;
        let mut finite = BTreeMap::new();
        for &place in places {
            match place {
                Place::Archimedean => real = Some(RealMatrix::Exact(m.clone())),
                Place::Finite(p) => {
                    finite.insert(p, m.clone());
                }
            }
        }
        PlacedMatrix::new(m.rows(), real, finite)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn real(&self) -> Option<&RealMatrix> {
        self.real.as_ref()
    }

    pub fn at_prime(&self, p: Prime) -> Option<&Matrix<ExactScalar>> {
        self.finite.get(&p)
    }

    pub fn places(&self) -> Vec<Place> {
        self.real
            .iter()
            .map(|_| Place::Archimedean)
            .chain(self.finite.keys().map(|&p| Place::Finite(p)))
            .collect()
    }

    /// Norm of the component at `place`.
    pub fn norm_at(&self, place: Place, kind: NormKind) -> Result<NormValue> {
        kind.check_place(place)?;
        match place {
            Place::Archimedean => self
                .real
                .as_ref()
                .map(|r| r.norm(kind))
                .ok_or_else(|| invalid("no real component")),
            Place::Finite(p) => {
                let m = self.finite.get(&p).ok_or_else(|| invalid(format!("no component at {p}")))?;
                matrix_norm(m, place, kind)
            }
        }
    }
}

/// An element of `prod_{v in S} Q_v^n`; components need not be related.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedVector {
    n: usize,
    real: Option<RealVector>,
    finite: BTreeMap<Prime, Vec<ExactScalar>>,
}

impl PlacedVector {
    pub fn new(n: usize, real: Option<RealVector>, finite: BTreeMap<Prime, Vec<ExactScalar>>) -> Result<Self> {
        if real.iter().any(|r| r.len() != n) || finite.values().any(|v| v.len() != n) {
            return Err(invalid(format!("placed vector components must have dimension {n}")));
        }
        Ok(PlacedVector { n, real, finite })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn real(&self) -> Option<&RealVector> {
        self.real.as_ref()
    }

    pub fn at_prime(&self, p: Prime) -> Option<&Vec<ExactScalar>> {
        self.finite.get(&p)
    }
}

/// `D(g) = max_v |g_v|_v` over the listed places.
///
/// The result does not depend on the order of `kinds`.
pub fn size_function(g: &PlacedMatrix, kinds: &[(Place, NormKind)]) -> Result<NormValue> {
    let mut best: Option<NormValue> = None;
    for &(place, kind) in kinds {
        let v = g.norm_at(place, kind)?;
        best = Some(match best {
            Some(b) if b.cmp_value(&v).is_ge() => b,
            _ => v,
        });
    }
    best.ok_or_else(|| invalid("size function needs at least one place"))
}
