use super::{Field, Matrix};
use crate::error::{invalid, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Matrix of `Lambda^k(M)` in the lexicographic wedge basis: entry `(R, C)`
/// is the minor of `M` on rows `R` and columns `C`.
pub fn wedge_action<T: Field>(m: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    let n = m.rows();
    if !m.is_square() || k == 0 || k > n {
        return Err(invalid(format!("exterior power {k} of a {}x{} matrix", m.rows(), m.cols())));
    }
    let idx = subsets(n, k);
    let mut data = Vec::with_capacity(idx.len() * idx.len());
    for r in &idx {
        for c in &idx {
            data.push(m.select(r, c).det()?);
        }
    }
    Matrix::from_vec(idx.len(), idx.len(), data)
}

/// Plücker coordinates of `v_1 ^ ... ^ v_k`.
pub fn wedge_point<T: Field>(vectors: &[Vec<T>]) -> Result<Vec<T>> {
    let k = vectors.len();
    let n = vectors.first().map_or(0, |v| v.len());
    if k == 0 || k > n || vectors.iter().any(|v| v.len() != n) {
        return Err(invalid("wedge of an empty or inconsistent family"));
    }
    let stack = Matrix::from_rows(vectors.to_vec())?;
    let rows: Vec<usize> = (0..k).collect();
    subsets(n, k).iter().map(|c| stack.select(&rows, c).det()).collect()
}

/// Euclidean norm of the wedge of the first `k` rows of `g`.
pub fn vol_first_rows(g: &Matrix<f64>, k: usize) -> Result<f64> {
    if k == 0 || k > g.rows() {
        return Err(invalid(format!("{k} rows requested from a {}-row matrix", g.rows())));
    }
    let rows: Vec<Vec<f64>> = (0..k).map(|i| g.row(i).to_vec()).collect();
    Ok(wedge_point(&rows)?.iter().map(|x| x * x).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::ExactScalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> ExactScalar {
        ExactScalar::from_int(n)
    }

    fn random_rational(rng: &mut ChaCha8Rng, n: usize) -> Matrix<ExactScalar> {
        Matrix::from_fn(n, n, |_, _| ExactScalar::new(rng.gen_range(-7i64..8), rng.gen_range(1i64..4)).unwrap())
    }

    /// 2x2 minor straight from the entries.
    fn minor2(m: &Matrix<ExactScalar>, r: [usize; 2], c: [usize; 2]) -> ExactScalar {
        m[(r[0], c[0])].clone() * m[(r[1], c[1])].clone() - m[(r[0], c[1])].clone() * m[(r[1], c[0])].clone()
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn wedge_of_identity_and_diagonal() {
        for n in 2..5 {
            for k in 1..=n {
                let w = wedge_action(&Matrix::<ExactScalar>::identity(n), k).unwrap();
                assert_eq!(w, Matrix::identity(binomial(n, k)));
            }
        }
        let d = Matrix::diagonal(&[q(2), q(3), q(5)]);
        assert_eq!(wedge_action(&d, 2).unwrap(), Matrix::diagonal(&[q(6), q(10), q(15)]));
        assert!(wedge_action(&d, 0).is_err());
        assert!(wedge_action(&d, 4).is_err());
    }

    #[test]
    fn cauchy_binet() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_rational(&mut rng, 3);
            let b = random_rational(&mut rng, 3);
            let ab = a.matmul(&b).unwrap();
            let lhs = wedge_action(&ab, 2).unwrap();
            // Oracle: each entry of the product of second compounds built from explicit 2x2 minors.
            let idx = [[0, 1], [0, 2], [1, 2]];
            for (i, r) in idx.iter().enumerate() {
                for (j, c) in idx.iter().enumerate() {
                    let mut acc = ExactScalar::from_int(0);
                    for s in &idx {
                        acc += minor2(&a, *r, *s) * minor2(&b, *s, *c);
                    }
                    assert_eq!(lhs[(i, j)], acc);
                }
            }
        }
    }

    #[test]
    fn functorial_on_inverses() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 10 {
            let m = random_rational(&mut rng, 4);
            let Ok(inv) = m.inverse() else { continue };
            for k in 1..=4 {
                let lhs = wedge_action(&inv, k).unwrap();
                let rhs = wedge_action(&m, k).unwrap().inverse().unwrap();
                assert_eq!(lhs, rhs);
            }
            checked += 1;
        }
    }

    #[test]
    fn wedge_points() {
        let e1 = vec![q(1), q(0), q(0)];
        let e2 = vec![q(0), q(1), q(0)];
        assert_eq!(wedge_point(&[e1.clone(), e2]).unwrap(), vec![q(1), q(0), q(0)]);
        let twice: Vec<_> = e1.iter().map(|x| x.clone() * q(2)).collect();
        assert!(wedge_point(&[e1, twice]).unwrap().iter().all(|x| x.is_zero()));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_rational(&mut rng, 4);
        let pl = wedge_point(&[m.row(0).to_vec(), m.row(1).to_vec()]).unwrap();
        for (i, c) in subsets(4, 2).iter().enumerate() {
            assert_eq!(pl[i], minor2(&m, [0, 1], [c[0], c[1]]));
        }
    }

    #[test]
    fn first_row_volumes() {
        for n in 2..5 {
            for k in 1..=n {
                assert!((vol_first_rows(&Matrix::identity(n), k).unwrap() - 1.0).abs() < 1e-15);
            }
        }
        let d = Matrix::diagonal(&[2.0, 0.5]);
        assert_eq!(vol_first_rows(&d, 1).unwrap(), 2.0);

        // Gram determinant oracle on random SL(3, R) elements.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mut g = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-2.0f64..2.0));
            let det = g.det().unwrap();
            if det.abs() < 1e-3 {
                continue;
            }
            let s = det.abs().cbrt() * det.signum();
            g = g.map(|x| x / s);
            let a = g.select(&[0, 1], &[0, 1, 2]);
            let gram = a.matmul(&a.transpose()).unwrap().det().unwrap();
            let v = vol_first_rows(&g, 2).unwrap();
            assert!((v - gram.sqrt()).abs() < 1e-10 * v.max(1.0));
        }
    }
}
