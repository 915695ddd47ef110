use std::fmt;

use super::Matrix;
use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Prime};

/// Largest matrix size supported by the fixed-size integer matrix.
pub const MAX_DIM: usize = 4;

/// Small square integer matrix stored inline, used on enumeration hot paths.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    n: u8,
    e: [i64; MAX_DIM * MAX_DIM],
}

impl IntMatrix {
    pub fn zero(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix size {n} out of range");
        IntMatrix { n: n as u8, e: [0; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM || rows.iter().any(|r| r.len() != n) {
            return Err(invalid(format!("integer matrices must be square of size 1..={MAX_DIM}")));
        }
        let mut m = IntMatrix::zero(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn sl2(a: i64, b: i64, c: i64, d: i64) -> Self {
        let mut e = [0; MAX_DIM * MAX_DIM];
        e[0] = a;
        e[1] = b;
        e[MAX_DIM] = c;
        e[MAX_DIM + 1] = d;
        IntMatrix { n: 2, e }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.e[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.e[i * MAX_DIM + j] = x;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.e[i * MAX_DIM..i * MAX_DIM + self.dim()]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |i| (0..n).map(move |j| self.get(i, j)))
    }

    pub fn frobenius_sq(&self) -> i128 {
        self.entries().map(|x| (x as i128) * (x as i128)).sum()
    }

    pub fn max_abs(&self) -> u64 {
        self.entries().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    /// Exact determinant by cofactor expansion (n <= 4, so at most 24 terms).
    pub fn det(&self) -> i128 {
        let n = self.dim();
        let idx: Vec<usize> = (0..n).collect();
        self.minor_det(0, &idx)
    }

    fn minor_det(&self, row: usize, cols: &[usize]) -> i128 {
        if cols.len() == 1 {
            return self.get(row, cols[0]) as i128;
        }
        let mut acc = 0i128;
        for (k, &c) in cols.iter().enumerate() {
            let x = self.get(row, c) as i128;
            if x == 0 {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&j| j != c).collect();
            let term = x * self.minor_det(row + 1, &rest);
            acc += if k % 2 == 0 { term } else { -term };
        }
        acc
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Option<IntMatrix> {
        let n = self.dim();
        if rhs.dim() != n {
            return None;
        }
        let mut out = IntMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for k in 0..n {
                    acc += self.get(i, k) as i128 * rhs.get(k, j) as i128;
                }
                out.set(i, j, i64::try_from(acc).ok()?);
            }
        }
        Some(out)
    }

    pub fn neg(&self) -> IntMatrix {
        let mut out = *self;
        for x in out.e.iter_mut() {
            *x = -*x;
        }
        out
    }

    pub fn to_exact(&self) -> Matrix<ExactScalar> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| ExactScalar::from_int(self.get(i, j)))
    }

    /// The rational matrix `p^(-level) * self`.
    pub fn to_exact_scaled(&self, p: Prime, level: u32) -> Matrix<ExactScalar> {
        let s = ExactScalar::prime_power(p, -(level as i64));
        self.to_exact().map(|x| x * &s)
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.get(i, j) as f64)
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim()).map(|i| self.row(i).to_vec()).collect()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn det_agrees_with_rational_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=MAX_DIM {
            for _ in 0..30 {
                let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-50..50)).collect()).collect();
                let m = IntMatrix::from_rows(&rows).unwrap();
                let exact = m.to_exact().det().unwrap();
                assert_eq!(ExactScalar::from(m.det()), exact);
            }
        }
    }

    #[test]
    fn basic_accessors() {
        let m = IntMatrix::sl2(2, 3, 1, 2);
        assert_eq!(m.det(), 1);
        assert_eq!(m.frobenius_sq(), 18);
        assert_eq!(m.max_abs(), 3);
        assert_eq!(m.to_string(), "[2 3; 1 2]");
        let sq = m.checked_mul(&m).unwrap();
        assert_eq!(sq, IntMatrix::sl2(7, 12, 4, 7));
        assert_eq!(IntMatrix::from_rows(&[vec![2, 3], vec![1, 2]]).unwrap(), m);
        let p = Prime::new(2).unwrap();
        assert_eq!(m.to_exact_scaled(p, 1)[(0, 1)], ExactScalar::new(3, 2).unwrap());
    }
}
