//! `SL(n, Z)` balls: the first `n - 1` rows are enumerated directly; the
//! last row then ranges over the affine lattice `{x : x . w = 1}`, `w` the
//! cofactor vector, which is searched with a Fincke-Pohst walk.

use num_integer::Integer;

use super::sl2::LevelBounds;
use super::GroupElement;
use crate::linalg::{IntMatrix, NormKind, MAX_DIM};

type Vector = [i64; MAX_DIM];

struct Walk<'a> {
    n: usize,
    lb: &'a LevelBounds,
    rows: [Vector; MAX_DIM],
    emit: &'a mut dyn FnMut(&GroupElement),
}

/// All elements whose first row starts with `a`.
pub(crate) fn visit_first_entry(n: usize, lb: &LevelBounds, a: i64, emit: &mut dyn FnMut(&GroupElement)) {
    let mut walk = Walk { n, lb, rows: [[0; MAX_DIM]; MAX_DIM], emit };
    let budget = match lb.kind {
        NormKind::Frobenius => lb.frob - (n as i128 - 1),
        NormKind::MaxEntry => i128::MAX,
    };
    if budget < (a as i128) * (a as i128) {
        return;
    }
    walk.rows[0][0] = a;
    walk.fill_row(0, 1, budget - (a as i128) * (a as i128), lb.frob);
}

impl Walk<'_> {
    /// Enumerate entries `col..n` of row `row` with `remaining` squared norm left for
    /// this row, `total_left` for this row and all later rows.
    fn fill_row(&mut self, row: usize, col: usize, remaining: i128, total_left: i128) {
        let n = self.n;
        if col == n {
            let v = self.rows[row];
            let norm: i128 = v[..n].iter().map(|&x| (x as i128) * (x as i128)).sum();
            if norm == 0 || v[..n].iter().fold(0i64, |g, &x| g.gcd(&x)) != 1 {
                return;
            }
            let left = total_left - norm;
            if row + 2 == n {
                self.last_row(left);
            } else {
                let rows_after = (n - row - 2) as i128;
                let budget = match self.lb.kind {
                    NormKind::Frobenius => left - rows_after,
                    NormKind::MaxEntry => i128::MAX,
                };
                self.fill_row(row + 1, 0, budget, left);
            }
            return;
        }
        let bound = match self.lb.kind {
            NormKind::Frobenius => {
                if remaining < 0 {
                    return;
                }
                num_integer::Roots::sqrt(&remaining) as i64
            }
            NormKind::MaxEntry => self.lb.entry,
        };
        for x in -bound..=bound {
            self.rows[row][col] = x;
            let rest = match self.lb.kind {
                NormKind::Frobenius => remaining - (x as i128) * (x as i128),
                NormKind::MaxEntry => remaining,
            };
            self.fill_row(row, col + 1, rest, total_left);
        }
        self.rows[row][col] = 0;
    }

    /// Complete the matrix with every admissible last row.
    fn last_row(&mut self, budget: i128) {
        let n = self.n;
        let k = n - 1;
        let w = cofactors(&self.rows, n);
        if w[..n].iter().fold(0i64, |g, &x| g.gcd(&x)) != 1 {
            return;
        }
        let x0 = particular_solution(&w, n);
        // Rows 1..n-1 span the integer solutions of x . w = 0 because w is primitive.
        let mut basis: Vec<Vector> = self.rows[..k].to_vec();
        lll_reduce(&mut basis, n);
        let (radius2, entry) = match self.lb.kind {
            NormKind::Frobenius => (budget, i64::MAX),
            NormKind::MaxEntry => ((n as i128) * (self.lb.entry as i128).pow(2), self.lb.entry),
        };
        if radius2 < 1 {
            return;
        }
        let rows = self.rows;
        let lb = self.lb;
        let emit = &mut self.emit;
        fincke_pohst(&basis, &x0, n, radius2 as f64, &mut |x: &Vector| {
            let norm: i128 = x[..n].iter().map(|&v| (v as i128) * (v as i128)).sum();
            if norm > radius2 || x[..n].iter().any(|v| v.abs() > entry) {
                return;
            }
            let mut m = IntMatrix::zero(n);
            for (i, r) in rows[..k].iter().enumerate() {
                for j in 0..n {
                    m.set(i, j, r[j]);
                }
            }
            for j in 0..n {
                m.set(k, j, x[j]);
            }
            debug_assert_eq!(m.det(), 1);
            emit(&GroupElement { level: lb.level, matrix: m });
        });
    }
}

/// `w` with `det(rows_0..rows_{n-2}, x) = x . w`.
fn cofactors(rows: &[Vector; MAX_DIM], n: usize) -> Vector {
    let mut w = [0; MAX_DIM];
    for (j, wj) in w.iter_mut().enumerate().take(n) {
        let minor: Vec<Vec<i64>> =
            (0..n - 1).map(|i| (0..n).filter(|&c| c != j).map(|c| rows[i][c]).collect()).collect();
        let d = if n == 2 { minor[0][0] as i128 } else { IntMatrix::from_rows(&minor).expect("small minor").det() };
        let sign = if (n - 1 + j).is_multiple_of(2) { 1 } else { -1 };
        *wj = (sign * d) as i64;
    }
    w
}

/// Some integer `x` with `x . w = 1`, for primitive `w`.
fn particular_solution(w: &Vector, n: usize) -> Vector {
    let mut x = [0i64; MAX_DIM];
    let mut g = w[0];
    x[0] = 1;
    for j in 1..n {
        let e = g.extended_gcd(&w[j]);
        for xi in x.iter_mut().take(j) {
            *xi *= e.x;
        }
        x[j] = e.y;
        g = e.gcd;
    }
    if g < 0 {
        for xi in x.iter_mut() {
            *xi = -*xi;
        }
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_f64(v: &Vector, n: usize) -> Vec<f64> {
    v[..n].iter().map(|&x| x as f64).collect()
}

/// Gram-Schmidt data: orthogonal vectors, squared lengths and the `mu` coefficients.
fn gram_schmidt(basis: &[Vector], n: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let k = basis.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut norms = vec![0.0; k];
    let mut mu = vec![vec![0.0; k]; k];
    for i in 0..k {
        let mut v = to_f64(&basis[i], n);
        let bi = v.clone();
        for j in 0..i {
            mu[i][j] = dot(&bi, &star[j]) / norms[j];
            for (vc, sc) in v.iter_mut().zip(&star[j]) {
                *vc -= mu[i][j] * sc;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (star, norms, mu)
}

/// Textbook LLL with `delta = 3/4` on a handful of short integer vectors.
fn lll_reduce(basis: &mut [Vector], n: usize) {
    let k = basis.len();
    let mut i = 1;
    while i < k {
        for j in (0..i).rev() {
            let (_, _, mu) = gram_schmidt(basis, n);
            let q = mu[i][j].round() as i64;
            if q != 0 {
                for c in 0..n {
                    basis[i][c] -= q * basis[j][c];
                }
            }
        }
        let (_, norms, mu) = gram_schmidt(basis, n);
        if norms[i] >= (0.75 - mu[i][i - 1] * mu[i][i - 1]) * norms[i - 1] {
            i += 1;
        } else {
            basis.swap(i, i - 1);
            i = i.max(2) - 1;
        }
    }
}

/// Every `x = x0 + sum u_i b_i` with `|x|^2 <= radius2` (plus a small float
/// slack, so callers must re-check exactly).
fn fincke_pohst(basis: &[Vector], x0: &Vector, n: usize, radius2: f64, f: &mut dyn FnMut(&Vector)) {
    let k = basis.len();
    let (star, norms, mu) = gram_schmidt(basis, n);
    // x0 = perp + sum c_i b_i; with c expressed through the Gram-Schmidt frame.
    let x0f = to_f64(x0, n);
    let mut coef_star: Vec<f64> = (0..k).map(|i| dot(&x0f, &star[i]) / norms[i]).collect();
    let perp2 = dot(&x0f, &x0f) - (0..k).map(|i| coef_star[i] * coef_star[i] * norms[i]).sum::<f64>();
    // Convert star coordinates into basis coordinates c (back substitution).
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let mut v = coef_star[i];
        for j in i + 1..k {
            v -= mu[j][i] * c[j];
        }
        c[i] = v;
    }
    coef_star.clear();
    let slack = 1e-7 * (radius2 + 1.0);
    let budget = radius2 - perp2.max(0.0) + slack;
    if budget < 0.0 {
        return;
    }
    let mut u = vec![0i64; k];
    let mut z = vec![0.0; k];
    search(k, &norms, &mu, &c, budget, &mut u, &mut z, &mut |u: &[i64]| {
        let mut x = *x0;
        for (i, &ui) in u.iter().enumerate() {
            for col in 0..n {
                x[col] += ui * basis[i][col];
            }
        }
        f(&x);
    });
}

#[allow(clippy::too_many_arguments)]
fn search(
    level: usize,
    norms: &[f64],
    mu: &[Vec<f64>],
    c: &[f64],
    budget: f64,
    u: &mut [i64],
    z: &mut [f64],
    f: &mut dyn FnMut(&[i64]),
) {
    if level == 0 {
        f(u);
        return;
    }
    let j = level - 1;
    let k = u.len();
    let center: f64 = -(j + 1..k).map(|i| mu[i][j] * z[i]).sum::<f64>();
    let r = (budget.max(0.0) / norms[j]).sqrt();
    let lo = (center - r - c[j]).ceil() as i64;
    let hi = (center + r - c[j]).floor() as i64;
    for uj in lo..=hi {
        u[j] = uj;
        z[j] = uj as f64 + c[j];
        let d = z[j] - center;
        let rest = budget - d * d * norms[j];
        if rest < 0.0 {
            continue;
        }
        search(j, norms, mu, c, rest, u, z, f);
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use std::collections::BTreeSet;

    fn brute_sl3(e: i64, frob: Option<i64>) -> BTreeSet<IntMatrix> {
        let mut out = BTreeSet::new();
        let range: Vec<i64> = (-e..=e).collect();
        let mut idx = [0usize; 9];
        let len = range.len();
        loop {
            let v: Vec<i64> = idx.iter().map(|&i| range[i]).collect();
            let ok_norm = frob.is_none_or(|f| v.iter().map(|x| x * x).sum::<i64>() <= f);
            if ok_norm {
                let m = IntMatrix::from_rows(&[v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec()]).unwrap();
                if m.det() == 1 {
                    out.insert(m);
                }
            }
            let mut pos = 0;
            loop {
                if pos == 9 {
                    return out;
                }
                idx[pos] += 1;
                if idx[pos] < len {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    fn as_set(v: Vec<IntMatrix>) -> BTreeSet<IntMatrix> {
        let n = v.len();
        let s: BTreeSet<_> = v.into_iter().collect();
        assert_eq!(s.len(), n, "duplicates in enumeration");
        s
    }

    #[test]
    fn sl3_max_entry_one_matches_brute_force() {
        let spec = BallSpec::slnz(3, Radius::from_int(1).unwrap(), NormKind::MaxEntry);
        let got = as_set(enum_slnz(&spec).unwrap());
        assert_eq!(got, brute_sl3(1, None));
    }

    #[test]
    fn sl3_frobenius_matches_brute_force() {
        for (t, e) in [("sqrt(3)", 1), ("2", 2), ("sqrt(5)", 2), ("sqrt(7)", 2)] {
            let r: Radius = t.parse().unwrap();
            let spec = BallSpec::slnz(3, r.clone(), NormKind::Frobenius);
            let got = as_set(enum_slnz(&spec).unwrap());
            let want = brute_sl3(e, Some(r.floor_squared_i128().unwrap() as i64));
            assert_eq!(got, want, "T={t}");
        }
        // Signed permutation matrices with determinant 1 are the whole ball at T = sqrt(3).
        let tiny = enum_slnz(&BallSpec::slnz(3, "sqrt(3)".parse().unwrap(), NormKind::Frobenius)).unwrap();
        assert_eq!(tiny.len(), 24);
    }

    #[test]
    fn sl2_via_rows_agrees_with_columns() {
        for norm in [NormKind::Frobenius, NormKind::MaxEntry] {
            let r = Radius::from_int(9).unwrap();
            let a = as_set(enum_slnz(&BallSpec::slnz(2, r.clone(), norm)).unwrap());
            let b = as_set(enum_sl2z(&BallSpec::sl2z(r, norm)).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sl4_smallest_ball() {
        // Frobenius norm 2 in SL(4, Z) forces a signed permutation matrix: 4! * 2^4 / 2.
        let got = enum_slnz(&BallSpec::slnz(4, Radius::from_int(2).unwrap(), NormKind::Frobenius)).unwrap();
        assert_eq!(got.len(), 192);
        assert!(got.iter().all(|m| m.det() == 1));
    }

    #[test]
    fn sl3_counts_are_monotone() {
        let mut last = 0;
        for t in 2..7 {
            let c = Ball::new(BallSpec::slnz(3, Radius::from_int(t).unwrap(), NormKind::Frobenius)).unwrap().count();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn lattice_helpers() {
        let w = [6, 10, 15, 0];
        let x = particular_solution(&w, 3);
        assert_eq!(x[0] * 6 + x[1] * 10 + x[2] * 15, 1);
        let mut basis = vec![[1, 0, 0, 0], [100, 1, 0, 0]];
        lll_reduce(&mut basis, 3);
        assert!(basis.iter().all(|b| b.iter().map(|x| x.abs()).max().unwrap() <= 1));
    }
}
