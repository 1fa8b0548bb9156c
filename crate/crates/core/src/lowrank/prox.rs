//! Proximal operators of the l1 and nuclear norms.

use super::dense::DenseMatrix;
use super::factor::LowRankFactorization;
use super::power::partial_svd;

/// Elementwise shrinkage `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(m: &DenseMatrix, tau: f64) -> DenseMatrix {
    debug_assert!(tau >= 0.0);
    m.map(|x| shrink(x, tau))
}

#[inline]
pub fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Singular value thresholding: `argmin_X tau |X|_* + 1/2 |X - M|_F^2`.
///
/// Only triplets with `sigma > tau` are computed. Returns the zero
/// factorization when every singular value is at most `tau`.
pub fn svt(m: &DenseMatrix, tau: f64) -> LowRankFactorization {
    debug_assert!(tau >= 0.0);
    let f = partial_svd(m, tau);
    let values: Vec<f64> = f.singular_values().iter().map(|s| s - tau).collect();
    LowRankFactorization::from_sorted_parts(
        f.rows(),
        f.cols(),
        f.left_columns().to_vec(),
        values,
        f.right_columns().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        let m = DenseMatrix::from_rows(&[&[5.0, -1.0, -4.5]]).unwrap();
        assert_eq!(soft_threshold(&m, 2.0).as_slice(), &[3.0, 0.0, -2.5]);
        assert_eq!(shrink(-4.5, 1.5), -3.0);
        assert_eq!(shrink(-1.0, 2.0), 0.0);
        assert_eq!(shrink(5.0, 2.0), 3.0);
    }

    #[test]
    fn svt_shifts_and_clips_diagonal() {
        let f = svt(&DenseMatrix::from_diag(&[3.0, 1.0]), 1.0);
        assert_eq!(f.rank(), 1);
        assert!((f.singular_values()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svt_can_return_rank_zero() {
        let f = svt(&DenseMatrix::from_diag(&[3.0, 1.0]), 5.0);
        assert_eq!(f.rank(), 0);
        assert_eq!(f.materialize().unwrap(), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn svt_with_zero_tau_reproduces_matrix() {
        let m = DenseMatrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64).cos());
        let f = svt(&m, 0.0);
        let err = f.materialize().unwrap().sub(&m).frobenius_norm();
        assert!(err < 1e-9 * m.frobenius_norm(), "reconstruction error {err}");
    }
}
