use twofloat::TwoFloat;

use crate::enumerate::GroupElement;
use crate::exact_arith::{arch_precision, mod_inverse_i128, valuation_i128, ArchPrecision, ExactScalar, Prime, SymbolicReal};
use crate::error::{invalid, Result};
use crate::linalg::{binomial, subsets, IntMatrix};

/// The vector acted on, prepared for fast evaluation.
#[derive(Clone, Debug)]
pub struct OrbitVector {
    real: Vec<f64>,
    real_ext: Vec<TwoFloat>,
    padic: Option<PadicSource>,
    /// Exterior power the group acts through.
    k: usize,
}

/// `v_p = num / (p^den_val * den_unit)`.
#[derive(Clone, Debug)]
struct PadicSource {
    p: Prime,
    num: Vec<i128>,
    den_val: i64,
    den_unit: i128,
}

/// `gamma v` at every place the vector lives on.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint {
    pub real: Vec<f64>,
    pub padic: Option<PadicPoint>,
}

/// A nonzero point of `Q_p^n`, as `|w|_p = p^abs_exp` and the primitive
/// unit part `p^abs_exp w = unit / den_unit`.
#[derive(Clone, Debug, PartialEq)]
pub struct PadicPoint {
    pub p: Prime,
    pub abs_exp: i64,
    pub unit: Vec<i128>,
    pub den_unit: i128,
}

impl PadicPoint {
    /// Unit part reduced modulo `p^m`, for planar points.
    pub fn unit_mod(&self, m: u32) -> Option<[i64; 2]> {
        if self.unit.len() != 2 {
            return None;
        }
        let q = self.p.pow_i128(m)?;
        let inv = mod_inverse_i128(self.den_unit, q)?;
        let r = |x: i128| ((x.rem_euclid(q) * inv).rem_euclid(q)) as i64;
        Some([r(self.unit[0]), r(self.unit[1])])
    }
}

impl OrbitVector {
    pub fn real(v: &[SymbolicReal]) -> Self {
        OrbitVector {
            real: v.iter().map(SymbolicReal::to_f64).collect(),
            real_ext: v.iter().map(SymbolicReal::to_twofloat).collect(),
            padic: None,
            k: 1,
        }
    }

    pub fn from_f64(v: &[f64]) -> Self {
        OrbitVector { real: v.to_vec(), real_ext: v.iter().map(|&x| TwoFloat::from(x)).collect(), padic: None, k: 1 }
    }

    pub fn with_padic(mut self, p: Prime, v: &[ExactScalar]) -> Result<Self> {
        if v.len() != self.real.len() {
            return Err(invalid("real and p-adic vectors differ in length"));
        }
        let mut den = num_bigint::BigInt::from(1);
        for x in v {
            den = num_integer::Integer::lcm(&den, x.denom());
        }
        let den_q = ExactScalar::from_int(den.clone());
        let mut num = Vec::with_capacity(v.len());
        for x in v {
            let n = (x * &den_q).to_i64().ok_or_else(|| invalid("p-adic vector too large"))?;
            num.push(n as i128);
        }
        let den: i128 = i128::try_from(den).map_err(|_| invalid("p-adic denominator too large"))?;
        let den_val = valuation_i128(den, p).unwrap_or(0) as i64;
        let den_unit = den / p.pow_i128(den_val as u32).expect("divides den");
        self.padic = Some(PadicSource { p, num, den_val, den_unit });
        Ok(self)
    }

    /// Act through `Lambda^k`; the stored vector has `binomial(n, k)` entries.
    pub fn with_wedge(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    pub fn fits(&self, g: &GroupElement) -> bool {
        let n = g.matrix.dim();
        self.k >= 1 && self.k <= n && binomial(n, self.k) == self.real.len() && (self.k == 1 || self.padic.is_none())
    }

    pub fn act(&self, g: &GroupElement, p: Option<Prime>) -> OrbitPoint {
        let m = if self.k == 1 { g.matrix } else { wedge_int(&g.matrix, self.k) };
        let rows = m.dim();
        let scale_exp = g.level as i32 * self.k as i32;
        let pf = p.map_or(1.0, |p| p.get() as f64);
        let real = if arch_precision() == ArchPrecision::Extended {
            (0..rows)
                .map(|i| {
                    let s = m.row(i).iter().zip(&self.real_ext).fold(TwoFloat::from(0.0), |acc, (&a, &x)| acc + x * a as f64);
                    f64::from(s / pf.powi(scale_exp))
                })
                .collect()
        } else {
            (0..rows)
                .map(|i| m.row(i).iter().zip(&self.real).map(|(&a, &x)| a as f64 * x).sum::<f64>() / pf.powi(scale_exp))
                .collect()
        };
        let padic = self.padic.as_ref().and_then(|src| {
            let mn: Vec<i128> =
                (0..rows).map(|i| m.row(i).iter().zip(&src.num).map(|(&a, &x)| a as i128 * x).sum()).collect();
            let kmin = mn.iter().filter_map(|&x| valuation_i128(x, src.p)).min()? as i64;
            let unit: Vec<i128> = mn.iter().map(|&x| x / src.p.pow_i128(kmin as u32).expect("divides")).collect();
            Some(PadicPoint { p: src.p, abs_exp: g.level as i64 + src.den_val - kmin, unit, den_unit: src.den_unit })
        });
        OrbitPoint { real, padic }
    }
}

/// `Lambda^k m` for a small integer matrix, rows and columns in lexicographic
/// subset order.
fn wedge_int(m: &IntMatrix, k: usize) -> IntMatrix {
    let n = m.dim();
    let idx = subsets(n, k);
    let rows: Vec<Vec<i64>> = idx
        .iter()
        .map(|r| {
            idx.iter()
                .map(|c| {
                    let sub: Vec<Vec<i64>> = r.iter().map(|&i| c.iter().map(|&j| m.get(i, j)).collect()).collect();
                    IntMatrix::from_rows(&sub).expect("square minor").det() as i64
                })
                .collect()
        })
        .collect();
    IntMatrix::from_rows(&rows).expect("wedge fits the fixed capacity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{wedge_action, Matrix};

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn real_action_matches_matrix_product() {
        let v = OrbitVector::from_f64(&[1.0, 2f64.sqrt()]);
        let g = GroupElement::integral(IntMatrix::sl2(2, 1, 1, 1));
        let w = v.act(&g, None);
        assert!((w.real[0] - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!((w.real[1] - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!(w.padic.is_none());
    }

    #[test]
    fn padic_point_valuation_and_unit_part() {
        let p = pr(2);
        let v = OrbitVector::from_f64(&[1.0, 1.0])
            .with_padic(p, &[ExactScalar::one(), ExactScalar::from_int(3)])
            .unwrap();
        // gamma = (1/2) [[2, 2], [1, 3]] has det 1; gamma v_p = (4, 5) with |.|_2 = 1.
        let g = GroupElement { level: 1, matrix: IntMatrix::sl2(2, 2, 1, 3) };
        let w = v.act(&g, Some(p)).padic.unwrap();
        // M v_p = (8, 10): valuation 1, so gamma v_p = (4, 5) and |.|_2 = 1.
        assert_eq!(w.abs_exp, 0);
        assert_eq!(w.unit, vec![4, 5]);
        assert_eq!(w.unit_mod(2), Some([0, 1]));
        // Denominators: v_p = (1/6, 1/2) = (1, 3)/6.
        let v = OrbitVector::from_f64(&[1.0, 1.0])
            .with_padic(p, &[ExactScalar::new(1, 6).unwrap(), ExactScalar::new(1, 2).unwrap()])
            .unwrap();
        let w = v.act(&GroupElement::integral(IntMatrix::identity(2)), Some(p)).padic.unwrap();
        assert_eq!(w.abs_exp, 1);
        // Unit part 2 * (1/6, 1/2) = (1/3, 1) = (1, 3)/3; mod 4, 1/3 = 3.
        assert_eq!(w.unit_mod(2), Some([3, 1]));
    }

    #[test]
    fn zero_padic_image_has_no_point() {
        let p = pr(3);
        let v = OrbitVector::from_f64(&[1.0, 0.0]).with_padic(p, &[ExactScalar::zero(), ExactScalar::zero()]).unwrap();
        assert!(v.act(&GroupElement::integral(IntMatrix::identity(2)), Some(p)).padic.is_none());
    }

    #[test]
    fn wedge_matches_exact_minors() {
        let m = IntMatrix::from_rows(&[vec![2, 1, 0], vec![1, 1, 0], vec![3, 4, 1]]).unwrap();
        let w = wedge_int(&m, 2);
        let exact = wedge_action(&m.to_exact(), 2).unwrap();
        let back: Matrix<ExactScalar> = w.to_exact();
        assert_eq!(back, exact);
        let v = OrbitVector::from_f64(&[1.0, 0.5, 0.25]).with_wedge(2);
        assert!(v.fits(&GroupElement::integral(m)));
        let pt = v.act(&GroupElement::integral(m), None);
        assert_eq!(pt.real.len(), 3);
    }
}
