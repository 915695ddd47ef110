use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use super::GroupElement;
use crate::error::{invalid, Error, Result};
use crate::exact_arith::{ExactScalar, Prime};
use crate::linalg::{IntMatrix, Matrix, MAX_DIM};

/// A finite union of cosets of the principal congruence subgroup of level
/// `p^m` in `SL(n, Z_p)`, given by representatives mod `p^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceWindow {
    p: Prime,
    m: u32,
    n: usize,
    /// Row-major residues in `[0, p^m)`.
    reps: BTreeSet<Vec<i64>>,
}

impl CongruenceWindow {
    pub fn new(p: Prime, m: u32, n: usize, reps: &[IntMatrix]) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(invalid(format!("window size {n} out of range")));
        }
        let modulus = p
            .pow_i128(m)
            .filter(|&q| q <= i64::MAX as i128)
            .ok_or_else(|| invalid("window modulus too large"))? as i64;
        if m == 0 {
            return Ok(Self::full(p, n));
        }
        if reps.is_empty() {
            return Err(invalid("a window needs at least one representative"));
        }
        let mut set = BTreeSet::new();
        for r in reps {
            if r.dim() != n {
                return Err(invalid(format!("representative {r} is not {n}x{n}")));
            }
            let reduced = IntMatrix::from_rows(
                &(0..n).map(|i| r.row(i).iter().map(|x| x.mod_floor(&modulus)).collect()).collect::<Vec<_>>(),
            )?;
            if reduced.det().rem_euclid(modulus as i128) != 1 % modulus as i128 {
                return Err(invalid(format!("representative {r} does not have determinant 1 mod {modulus}")));
            }
            if !set.insert(reduced.entries().collect::<Vec<_>>()) {
                return Err(invalid(format!("representative {r} repeats a coset mod {modulus}")));
            }
        }
        Ok(CongruenceWindow { p, m, n, reps: set })
    }

    /// The whole of `SL(n, Z_p)`.
    pub fn full(p: Prime, n: usize) -> Self {
        CongruenceWindow { p, m: 0, n, reps: BTreeSet::from([vec![0; n * n]]) }
    }

    /// The principal congruence subgroup `{g = I mod p^m}`.
    pub fn principal(p: Prime, m: u32, n: usize) -> Result<Self> {
        CongruenceWindow::new(p, m, n, &[IntMatrix::identity(n)])
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_reps(&self) -> usize {
        self.reps.len()
    }

    pub fn modulus(&self) -> i64 {
        self.p.pow_i128(self.m).expect("checked at construction") as i64
    }

    pub fn reps(&self) -> impl Iterator<Item = IntMatrix> + '_ {
        self.reps.iter().map(|r| {
            let rows: Vec<Vec<i64>> = r.chunks(self.n).map(|c| c.to_vec()).collect();
            IntMatrix::from_rows(&rows).expect("stored reps are well formed")
        })
    }

    /// Haar mass of the window with `SL(n, Z_p)` normalized to 1.
    pub fn mass(&self) -> ExactScalar {
        if self.m == 0 {
            return ExactScalar::one();
        }
        let count = ExactScalar::from_int(self.reps.len() as i64);
        count * sl_order_mod_prime_power(self.p, self.m, self.n).recip().expect("group order is positive")
    }

    /// Membership of an integral matrix.
    pub fn contains_int(&self, m: &IntMatrix) -> bool {
        if m.dim() != self.n {
            return false;
        }
        if self.m == 0 {
            return true;
        }
        let q = self.modulus();
        let key: Vec<i64> = m.entries().map(|x| x.mod_floor(&q)).collect();
        self.reps.contains(&key)
    }

    /// Membership of `p^(-level) M`; elements with positive level are not
    /// p-integral and lie outside every window.
    pub fn contains(&self, g: &GroupElement) -> bool {
        g.level == 0 && self.contains_int(&g.matrix)
    }

    /// Membership of a rational matrix.
    pub fn contains_exact(&self, g: &Matrix<ExactScalar>) -> bool {
        if g.rows() != self.n || g.cols() != self.n {
            return false;
        }
        let mut key = Vec::with_capacity(self.n * self.n);
        for x in g.entries() {
            match x.residue_mod_prime_power(self.p, self.m) {
                Some(r) => key.push(i64::try_from(r).expect("residue below modulus")),
                None => return false,
            }
        }
        self.m == 0 || self.reps.contains(&key)
    }
}

/// `|SL(n, Z/p^m)|` as an exact integer.
pub fn sl_order_mod_prime_power(p: Prime, m: u32, n: usize) -> ExactScalar {
    if m == 0 {
        return ExactScalar::one();
    }
    let pe = |e: i64| ExactScalar::prime_power(p, e);
    let mut order = pe((n * (n - 1) / 2) as i64);
    for i in 2..=n {
        order *= pe(i as i64) - ExactScalar::one() ;
    }
    order * pe(((n * n - 1) as i64) * (m as i64 - 1))
}

/// Text form: `p <prime>`, `m <exponent>`, `n <size>` lines followed by one
/// representative per line (`a b; c d`). `#` starts a comment.
impl fmt::Display for CongruenceWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p {}", self.p)?;
        writeln!(f, "m {}", self.m)?;
        writeln!(f, "n {}", self.n)?;
        if self.m > 0 {
            for r in self.reps() {
                let rows: Vec<String> = (0..self.n)
                    .map(|i| r.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                    .collect();
                writeln!(f, "{}", rows.join("; "))?;
            }
        }
        Ok(())
    }
}

impl FromStr for CongruenceWindow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (mut p, mut m, mut n) = (None, None, None);
        let mut reps = Vec::new();
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("window line {}: {what}", lineno + 1));
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or("");
            match head {
                "p" | "m" | "n" => {
                    let v: u64 = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| bad("expected an integer"))?;
                    match head {
                        "p" => p = Some(Prime::new(v)?),
                        "m" => m = Some(v as u32),
                        _ => n = Some(v as usize),
                    }
                }
                _ => {
                    let rows: Vec<Vec<i64>> = line
                        .split(';')
                        .map(|r| r.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(|t| t.parse::<i64>()).collect())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("expected integer entries"))?;
                    reps.push(IntMatrix::from_rows(&rows).map_err(|e| bad(&e.to_string()))?);
                }
            }
        }
        let p = p.ok_or_else(|| Error::Parse("window is missing 'p'".into()))?;
        let m = m.ok_or_else(|| Error::Parse("window is missing 'm'".into()))?;
        let n = n.unwrap_or(2);
        CongruenceWindow::new(p, m, n, &reps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    /// All 2x2 matrices over Z/q with determinant 1, by brute force.
    fn sl2_mod(q: i64) -> Vec<IntMatrix> {
        let mut out = Vec::new();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        if (a * d - b * c).rem_euclid(q) == 1 % q {
                            out.push(IntMatrix::sl2(a, b, c, d));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn group_orders_match_brute_force() {
        for (pr, m) in [(2, 1), (2, 2), (3, 1), (5, 1), (2, 3), (3, 2)] {
            let q = (pr as i64).pow(m);
            let order = sl_order_mod_prime_power(p(pr), m, 2);
            assert_eq!(order, ExactScalar::from_int(sl2_mod(q).len() as i64), "p={pr} m={m}");
        }
        assert_eq!(sl2_mod(2).len(), 6);
        // |SL(3, F_2)| = 168.
        assert_eq!(sl_order_mod_prime_power(p(2), 1, 3), ExactScalar::from_int(168));
    }

    #[test]
    fn masses() {
        let w = CongruenceWindow::principal(p(2), 1, 2).unwrap();
        assert_eq!(w.mass(), ExactScalar::new(1, 6).unwrap());
        let all = CongruenceWindow::new(p(2), 1, 2, &sl2_mod(2)).unwrap();
        assert_eq!(all.mass(), ExactScalar::one());
        assert_eq!(CongruenceWindow::full(p(3), 2).mass(), ExactScalar::one());
    }

    #[test]
    fn membership() {
        let w = CongruenceWindow::principal(p(2), 1, 2).unwrap();
        assert!(w.contains_int(&IntMatrix::identity(2)));
        assert!(w.contains_int(&IntMatrix::sl2(3, 2, 4, 3)));
        assert!(!w.contains_int(&IntMatrix::sl2(1, 1, 0, 1)));
        let half = ExactScalar::new(1, 2).unwrap();
        let non_integral = Matrix::diagonal(&[ExactScalar::from_int(2), half]);
        assert!(!w.contains_exact(&non_integral));
        assert!(!CongruenceWindow::full(p(2), 2).contains_exact(&non_integral));
        assert!(CongruenceWindow::full(p(2), 2).contains_exact(&Matrix::identity(2)));
        assert!(!w.contains(&GroupElement { level: 1, matrix: IntMatrix::sl2(4, 0, 0, 1) }));
    }

    #[test]
    fn rejects_bad_reps() {
        assert!(CongruenceWindow::new(p(2), 1, 2, &[IntMatrix::sl2(1, 0, 0, 0)]).is_err());
        assert!(CongruenceWindow::new(p(2), 1, 2, &[IntMatrix::identity(2), IntMatrix::sl2(3, 0, 2, 1)]).is_err());
        assert!(CongruenceWindow::new(p(3), 1, 2, &[]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let w = CongruenceWindow::new(p(3), 1, 2, &[IntMatrix::identity(2), IntMatrix::sl2(1, 1, 0, 1)]).unwrap();
        let back: CongruenceWindow = w.to_string().parse().unwrap();
        assert_eq!(back, w);
        let text = "# principal level 2\np 2\nm 1\nn 2\n1 0; 0 1\n";
        assert_eq!(text.parse::<CongruenceWindow>().unwrap(), CongruenceWindow::principal(p(2), 1, 2).unwrap());
        assert!("p 4\nm 1\n1 0; 0 1".parse::<CongruenceWindow>().is_err());
    }
}
