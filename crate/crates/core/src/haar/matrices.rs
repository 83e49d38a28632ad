//! Dense Haar and Walsh-Hadamard matrices built by their Kronecker recursions.
//!
//! These are the reference operators for the fast transforms in the parent
//! module; nothing in the fast path depends on them.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use super::{check_level_count, TransformMatrix};
use crate::{Matrix, Result};

/// `2^(-k/2)`, computed without rounding for even `k`.
pub(crate) fn inv_sqrt_pow2(k: u32) -> f64 {
    let even = 0.5f64.powi((k / 2) as i32);
    if k % 2 == 1 {
        even * FRAC_1_SQRT_2
    } else {
        even
    }
}

fn sqrt_pow2(k: u32) -> f64 {
    let even = 2f64.powi((k / 2) as i32);
    if k % 2 == 1 {
        even * SQRT_2
    } else {
        even
    }
}

/// Unnormalized Haar recursion:
/// `Haar_{k+1} = [Haar_k ⊗ (1 1); 2^(k/2) I ⊗ (1 -1)]`, `Haar_1 = [[1,1],[1,-1]]`.
///
/// With `detail_gain == false` the `2^(k/2)` factor is dropped, which gives the
/// add/sub-only integer filter bank.
fn haar_recursion(k: u32, detail_gain: bool) -> Matrix {
    let mut m = Matrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).expect("2x2");
    for level in 1..k {
        let half = 1usize << level;
        let n = half * 2;
        let gain = if detail_gain {
            sqrt_pow2(level)
        } else {
            1.0
        };
        let mut next = Matrix::zeros(n, n);
        for r in 0..half {
            for c in 0..half {
                let v = m[(r, c)];
                next[(r, 2 * c)] = v;
                next[(r, 2 * c + 1)] = v;
            }
            next[(half + r, 2 * r)] = gain;
            next[(half + r, 2 * r + 1)] = -gain;
        }
        m = next;
    }
    m
}

/// Orthonormal `2^k x 2^k` Haar matrix, rows in multilevel packed order
/// (`[a'_0, d'_0, d_0, d_1]` for `k = 2`).
pub fn haar_matrix(k: u32) -> Result<TransformMatrix> {
    check_level_count(k)?;
    // every row of the unnormalized recursion has squared norm 2^k
    Ok(haar_recursion(k, true).scale(inv_sqrt_pow2(k)))
}

/// Walsh-Hadamard matrix `[[H, H], [H, -H]]` of order `2^k`, optionally scaled
/// by `2^(-k/2)` to make it orthonormal.
pub fn hadamard_matrix(k: u32, normalized: bool) -> Result<TransformMatrix> {
    check_level_count(k)?;
    let mut m = Matrix::from_rows(&[[1.0]]).expect("1x1");
    for _ in 0..k {
        let h = m.rows();
        let mut next = Matrix::zeros(2 * h, 2 * h);
        for r in 0..h {
            for c in 0..h {
                let v = m[(r, c)];
                next[(r, c)] = v;
                next[(r, c + h)] = v;
                next[(r + h, c)] = v;
                next[(r + h, c + h)] = -v;
            }
        }
        m = next;
    }
    Ok(if normalized {
        m.scale(inv_sqrt_pow2(k))
    } else {
        m
    })
}

/// Add/sub-only Haar filter bank: the orthonormal rows with all scale factors
/// removed. For `k = 2` this is `H_4` with its `sqrt(2)` detail rows replaced by
/// `[1, -1, 0, 0]` and `[0, 0, 1, -1]` (and the `1/2` dropped from the rest).
pub fn integer_haar_rows(k: u32) -> Result<TransformMatrix> {
    check_level_count(k)?;
    if k < 2 {
        return Err(crate::Error::Size(format!(
            "integer Haar rows need k >= 2, got {k}"
        )));
    }
    Ok(haar_recursion(k, false))
}

/// Integer companion inverse of [`integer_haar_rows`].
///
/// Returns `(B, s)` with integer-valued `B` such that `B · M = s · I`, so
/// `x = (B · (M · x)) / s` is exact in integer arithmetic. The rows of `M` are
/// mutually orthogonal with power-of-two squared norms, hence
/// `B = Mᵀ · diag(s / ‖m_r‖²)` with `s = 2^k`.
pub fn integer_haar_inverse(k: u32) -> Result<(TransformMatrix, u64)> {
    let m = integer_haar_rows(k)?;
    let n = m.rows();
    let scale = n as f64;
    let mut b = m.transpose();
    for r in 0..n {
        let norm2: f64 = m.row(r).iter().map(|v| v * v).sum();
        let w = scale / norm2;
        for c in 0..n {
            b[(c, r)] *= w;
        }
    }
    Ok((b, n as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_orthonormal(m: &Matrix, tol: f64) {
        let p = m.matmul(&m.transpose()).unwrap();
        assert!(p.max_abs_diff(&Matrix::identity(m.rows())) < tol);
    }

    #[test]
    fn h2_matches_normalized_base_case() {
        let h = haar_matrix(1).unwrap();
        let s = FRAC_1_SQRT_2;
        assert_eq!(h, Matrix::from_rows(&[[s, s], [s, -s]]).unwrap());
    }

    #[test]
    fn h4_explicit() {
        let r2 = 2f64.sqrt();
        let expected = Matrix::from_rows(&[
            [1.0, 1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0, -1.0],
            [r2, -r2, 0.0, 0.0],
            [0.0, 0.0, r2, -r2],
        ])
        .unwrap()
        .scale(0.5);
        assert!(haar_matrix(2).unwrap().max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn orthonormal_up_to_k10() {
        for k in 1..=10 {
            assert_orthonormal(&haar_matrix(k).unwrap(), 1e-12);
            assert_orthonormal(&hadamard_matrix(k, true).unwrap(), 1e-12);
        }
    }

    #[test]
    fn hadamard_small_orders() {
        assert_eq!(
            hadamard_matrix(1, false).unwrap(),
            Matrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).unwrap()
        );
        assert_eq!(
            hadamard_matrix(2, false).unwrap(),
            Matrix::from_rows(&[
                [1.0, 1.0, 1.0, 1.0],
                [1.0, -1.0, 1.0, -1.0],
                [1.0, 1.0, -1.0, -1.0],
                [1.0, -1.0, -1.0, 1.0],
            ])
            .unwrap()
        );
    }

    #[test]
    fn two_by_two_haar_is_hadamard() {
        assert_eq!(haar_matrix(1).unwrap(), hadamard_matrix(1, true).unwrap());
    }

    #[test]
    fn level_count_bounds() {
        assert!(haar_matrix(0).is_err());
        assert!(haar_matrix(21).is_err());
        assert!(hadamard_matrix(0, false).is_err());
        assert!(integer_haar_rows(1).is_err());
    }

    #[test]
    fn integer_rows_k2() {
        let m = integer_haar_rows(2).unwrap();
        assert_eq!(m.row(2), &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(m.row(3), &[0.0, 0.0, 1.0, -1.0]);
        let y = m.matvec(&[1.0; 4]).unwrap();
        assert_eq!(&y[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn integer_inverse_is_integral() {
        for k in 2..=6 {
            let (b, s) = integer_haar_inverse(k).unwrap();
            assert!(b.as_slice().iter().all(|v| v.fract() == 0.0));
            let p = b.matmul(&integer_haar_rows(k).unwrap()).unwrap();
            assert_eq!(p, Matrix::identity(1 << k).scale(s as f64));
        }
    }
}
