use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::IntMatrix;

/// Result of Smith normal form: u * m * v = s with u, v unimodular and s
/// diagonal, non-negative, each diagonal entry dividing the next.
#[derive(Debug, Clone)]
pub struct Snf {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Diagonal entries up to min(rows, cols).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let k = self.s.rows().min(self.s.cols());
        (0..k).map(|i| self.s.get(i, i).clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }
}

/// Nearest-integer quotient, used so remainders shrink as fast as possible.
fn div_nearest(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if (&r * 2u8).abs() > b.abs() {
        if a.sign() == b.sign() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Smallest nonzero |entry| in the trailing submatrix starting at (k, k).
fn find_pivot(s: &IntMatrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for i in k..s.rows() {
        for j in k..s.cols() {
            let e = s.get(i, j);
            if e.is_zero() {
                continue;
            }
            let a = e.abs();
            match &best {
                Some((_, _, cur)) if *cur <= a => {}
                _ => best = Some((i, j, a)),
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// First entry in the trailing submatrix not divisible by the pivot at (k, k).
fn find_nondivisible(s: &IntMatrix, k: usize) -> Option<usize> {
    let p = s.get(k, k);
    for i in k + 1..s.rows() {
        for j in k + 1..s.cols() {
            if !s.get(i, j).mod_floor(p).is_zero() {
                return Some(i);
            }
        }
    }
    None
}

pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.rows();
    let cols = m.cols();
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    let steps = rows.min(cols);
    for k in 0..steps {
        loop {
            let Some((pi, pj)) = find_pivot(&s, k) else {
                break;
            };
            s.swap_rows(k, pi);
            u.swap_rows(k, pi);
            s.swap_cols(k, pj);
            v.swap_cols(k, pj);

            // Clear column k below the pivot; leftover remainders mean a
            // strictly smaller pivot exists, so re-pick.
            let mut dirty = false;
            for i in k + 1..rows {
                if s.get(i, k).is_zero() {
                    continue;
                }
                let q = -div_nearest(s.get(i, k), s.get(k, k));
                s.add_row_multiple(i, k, &q);
                u.add_row_multiple(i, k, &q);
                if !s.get(i, k).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            for j in k + 1..cols {
                if s.get(k, j).is_zero() {
                    continue;
                }
                let q = -div_nearest(s.get(k, j), s.get(k, k));
                s.add_col_multiple(j, k, &q);
                v.add_col_multiple(j, k, &q);
                if !s.get(k, j).is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // Pivot isolated. Fold in any entry it does not divide yet, so the
            // diagonal ends up a divisibility chain.
            if let Some(i) = find_nondivisible(&s, k) {
                let one = BigInt::from(1);
                s.add_row_multiple(k, i, &one);
                u.add_row_multiple(k, i, &one);
                continue;
            }
            break;
        }
    }
    for k in 0..steps {
        if s.get(k, k).is_negative() {
            s.negate_row(k);
            u.negate_row(k);
        }
    }
    Snf { u, s, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use num_traits::One;

    fn check_snf(m: &IntMatrix) {
        let snf = smith_normal_form(m);
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.s, "u*m*v != s");
        assert!(snf.u.is_unimodular(), "u not unimodular");
        assert!(snf.v.is_unimodular(), "v not unimodular");
        assert!(snf.s.is_diagonal(), "s not diagonal");
        let d = snf.diagonal();
        for w in d.windows(2) {
            assert!(!w[0].is_negative() && !w[1].is_negative());
            if w[1].is_zero() {
                continue;
            }
            assert!(!w[0].is_zero(), "zero before nonzero on diagonal");
            assert!(w[1].mod_floor(&w[0]).is_zero(), "divisibility chain broken");
        }
    }

    #[test]
    fn snf_two_by_two() {
        let m = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        let snf = smith_normal_form(&m);
        assert_eq!(
            snf.diagonal(),
            vec![BigInt::from(2), BigInt::from(4)],
            "diag(2, 4) expected"
        );
        check_snf(&m);
    }

    #[test]
    fn snf_zero_and_identity() {
        check_snf(&IntMatrix::zero(3, 2));
        let id = IntMatrix::identity(4);
        let snf = smith_normal_form(&id);
        assert_eq!(snf.s, id);
        check_snf(&id);
    }

    #[test]
    fn snf_rectangular_and_rank_deficient() {
        check_snf(&IntMatrix::from_rows(&[vec![1, 2, 3], vec![2, 4, 6]]));
        check_snf(&IntMatrix::from_rows(&[
            vec![0, 0],
            vec![0, 3],
            vec![6, 0],
        ]));
        check_snf(&IntMatrix::from_rows(&[vec![-7]]));
        check_snf(&IntMatrix::zero(0, 5));
        check_snf(&IntMatrix::zero(5, 0));
    }

    #[test]
    fn snf_random_small() {
        let mut rng = SplitMix64::new(0x5eed);
        for _ in 0..200 {
            let rows = 1 + rng.below(5) as usize;
            let cols = 1 + rng.below(5) as usize;
            let mut m = IntMatrix::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, BigInt::from(rng.range_i64(-20, 21)));
                }
            }
            check_snf(&m);
        }
    }

    #[test]
    fn det_matches_cofactor_on_small() {
        let m = IntMatrix::from_rows(&[vec![2, 0, 1], vec![1, 3, -1], vec![0, 4, 2]]);
        // 2*(6+4) - 0 + 1*(4-0) = 24
        assert_eq!(m.det(), BigInt::from(24));
        assert_eq!(IntMatrix::identity(3).det(), BigInt::one());
        assert_eq!(IntMatrix::zero(2, 2).det(), BigInt::zero());
    }
}
