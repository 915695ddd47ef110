use crate::error::{invalid, Result};
use crate::exact_arith::{ExactScalar, Prime};

/// Haar volume of `{g in SL(2, Q_p) : |g|_p <= p^j}`, with `SL(2, Z_p)` of mass 1.
///
/// Level `a` (elements `p^-a M`, `M` primitive with `det M = p^(2a)`)
/// contributes `p^(2a-1) (p + 1)` cosets of `SL(2, Z_p)`.
pub fn padic_sl2_ball_volume(p: Prime, j: i64) -> Result<ExactScalar> {
    if j < 0 {
        return Err(invalid(format!("ball exponent must be >= 0, got {j}")));
    }
    let mut total = ExactScalar::one();
    let pp = ExactScalar::from_int(p.get() + 1);
    for a in 1..=j {
        total += ExactScalar::prime_power(p, 2 * a - 1) * &pp;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Count primitive upper-triangular Hermite forms `[[x, y], [0, z]]` with
    /// `x z = p^(2a)`, `0 <= y < z`, for `a <= j`.
    fn hnf_ball_count(p: i64, j: u32) -> i64 {
        let mut count = 1;
        for a in 1..=j {
            let d = p.pow(2 * a);
            for i in 0..=2 * a {
                let (x, z) = (p.pow(i), d / p.pow(i));
                for y in 0..z {
                    if x % p != 0 || y % p != 0 || z % p != 0 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn matches_hermite_form_count() {
        for p in [2u64, 3, 5] {
            for j in 0..=4u32 {
                let got = padic_sl2_ball_volume(Prime::new(p).unwrap(), j as i64).unwrap();
                assert_eq!(got, ExactScalar::from_int(hnf_ball_count(p as i64, j)), "p={p} j={j}");
            }
        }
    }

    #[test]
    fn growth_ratio_tends_to_p_squared() {
        let p = Prime::new(2).unwrap();
        let v6 = padic_sl2_ball_volume(p, 6).unwrap().to_f64();
        let v7 = padic_sl2_ball_volume(p, 7).unwrap().to_f64();
        assert_eq!(v6, 8191.0);
        assert!((v7 / v6 / 4.0 - 1.0).abs() < 0.02);
        assert!(padic_sl2_ball_volume(p, -1).is_err());
    }
}
