//! Matrices over the places of Q: determinants, per-place norms, the size
//! function `D(g) = max_v |g_v|_v`, and exterior-power (Plücker) data.

mod int;
mod norm;
mod placed;
mod wedge;

pub use int::{IntMatrix, MAX_DIM};
pub use norm::{matrix_norm, max_entry_norm_f64, frobenius_f64, NormKind, NormValue, Radius};
pub use placed::{size_function, PlacedMatrix, PlacedVector, RealMatrix, RealVector};
pub use wedge::{binomial, subsets, vol_first_rows, wedge_action, wedge_point};

use std::fmt;
use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::exact_arith::ExactScalar;

/// Arithmetic needed by elimination-based routines.
pub trait Field:
    Clone
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Field for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>
{
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(invalid("ragged matrix rows"));
        }
        Matrix::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Submatrix on the given (ordered) rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }
}

impl<T: Clone + Zero + One> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diagonal(d: &[T]) -> Self {
        let n = d.len();
        Matrix::from_fn(n, n, |i, j| if i == j { d[i].clone() } else { T::zero() })
    }
}

impl<T> Matrix<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc = acc + self[(i, k)].clone() * rhs[(k, j)].clone();
            }
            acc
        }))
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(invalid("dimension mismatch in matrix-vector product"));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (k, x) in v.iter().enumerate() {
                    acc = acc + self[(i, k)].clone() * x.clone();
                }
                acc
            })
            .collect())
    }
}

impl<T: Field> Matrix<T> {
    /// Determinant by Gaussian elimination with nonzero pivoting.
    pub fn det(&self) -> Result<T> {
        if !self.is_square() {
            return Err(invalid("determinant of a non-square matrix"));
        }
        Ok(det_by_elimination(self.clone()))
    }

    /// Inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Matrix<T>> {
        if !self.is_square() {
            return Err(invalid("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::<T>::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or_else(|| invalid("singular matrix"))?;
            a.swap_rows(col, pivot);
            inv.swap_rows(col, pivot);
            let pv = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() / pv.clone();
                inv[(col, j)] = inv[(col, j)].clone() / pv.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    a[(r, j)] = a[(r, j)].clone() - f.clone() * a[(col, j)].clone();
                    inv[(r, j)] = inv[(r, j)].clone() - f.clone() * inv[(col, j)].clone();
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

fn det_by_elimination<T: Field>(mut a: Matrix<T>) -> T {
    let n = a.rows;
    let mut det = T::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
            return T::zero();
        };
        if pivot != col {
            a.swap_rows(col, pivot);
            det = -det;
        }
        let pv = a[(col, col)].clone();
        det = det * pv.clone();
        for r in col + 1..n {
            if a[(r, col)].is_zero() {
                continue;
            }
            let f = a[(r, col)].clone() / pv.clone();
            for j in col..n {
                a[(r, j)] = a[(r, j)].clone() - f.clone() * a[(col, j)].clone();
            }
        }
    }
    det
}

/// Exact determinant of a square rational matrix.
pub fn det(m: &Matrix<ExactScalar>) -> Result<ExactScalar> {
    m.det()
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Matrix<ExactScalar> {
    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    /// Parse a row-major literal: rows separated by `;`, entries by spaces or
    /// commas, each entry an exact rational string such as `-3/4`.
    pub fn parse_square(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s
            .split(|c: char| c == ';' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let n = (tokens.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != tokens.len() {
            return Err(Error::Parse(format!("{} entries do not form a square matrix", tokens.len())));
        }
        let data = tokens
            .iter()
            .map(|t| ExactScalar::from_str(t))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(n, n, data)
    }

    /// Row-major literal with exact rational entries, round-trips with [`Matrix::parse_square`].
    pub fn to_literal(&self) -> String {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join(";")
    }
}
