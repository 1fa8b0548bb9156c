//! Power iteration for leading singular triplets and a deflated partial SVD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use super::dense::{dot, norm, normalize, DenseMatrix, GramSide, LinearOperator};
use super::factor::{symmetric_eigen, LowRankFactorization};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x05ee_d0fb_65ab;

/// `(sigma, u, v)` with `A v = sigma u` and `A^T u ~ sigma v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SingularTriplet {
    /// `sigma = 0` with the first canonical basis vectors.
    pub fn zero(rows: usize, cols: usize) -> Self {
        let mut u = vec![0.0; rows];
        let mut v = vec![0.0; cols];
        u[0] = 1.0;
        v[0] = 1.0;
        SingularTriplet { sigma: 0.0, u, v }
    }
}

/// Power iteration on `A^T A`, run through matrix-vector products only.
///
/// Convergence is declared once `|A^T u - sigma v| <= tol * sigma`; by
/// construction `A v = sigma u` holds exactly for every returned iterate.
#[derive(Clone, Debug)]
pub struct PowerIteration {
    tol: f64,
    max_iter: usize,
    seed: u64,
    start: Option<Vec<f64>>,
}

impl PowerIteration {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        PowerIteration {
            tol,
            max_iter: max_iter.max(1),
            seed: DEFAULT_SEED,
            start: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Starts from `v` instead of a seeded random vector.
    pub fn warm_start(mut self, v: Vec<f64>) -> Self {
        self.start = Some(v);
        self
    }

    pub fn run<O: LinearOperator + ?Sized>(&self, op: &O) -> Result<SingularTriplet> {
        let (m, n) = (op.nrows(), op.ncols());
        let mut v = match &self.start {
            Some(s) if s.len() == n && norm(s) > 0.0 => s.clone(),
            _ => random_unit(n, self.seed),
        };
        normalize(&mut v);
        let mut retried = self.start.is_none();
        let mut u = vec![0.0; m];
        let mut z = vec![0.0; n];
        let mut best: Option<(f64, SingularTriplet)> = None;

        for _ in 0..self.max_iter {
            op.apply(&v, &mut u);
            let sigma = normalize(&mut u);
            if sigma == 0.0 {
                if !retried {
                    // A warm start in the null space says nothing about A.
                    retried = true;
                    v = random_unit(n, self.seed);
                    continue;
                }
                return Ok(SingularTriplet::zero(m, n));
            }
            op.apply_transpose(&u, &mut z);
            let residual = z.iter().zip(&v).map(|(a, b)| (a - sigma * b).powi(2)).sum::<f64>().sqrt();
            let relative = residual / sigma;
            if best.as_ref().is_none_or(|(r, _)| relative < *r) {
                best = Some((
                    relative,
                    SingularTriplet {
                        sigma,
                        u: u.clone(),
                        v: v.clone(),
                    },
                ));
            }
            if relative <= self.tol {
                return Ok(SingularTriplet { sigma, u, v });
            }
            v.copy_from_slice(&z);
            normalize(&mut v);
        }

        let (residual, best) = best.unwrap_or_else(|| (f64::INFINITY, SingularTriplet::zero(m, n)));
        Err(Error::NotConverged {
            iterations: self.max_iter,
            residual,
            best: Box::new(best),
        })
    }
}

/// Leading singular triplet of `m` by seeded power iteration.
pub fn top_singular_pair(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SingularTriplet> {
    PowerIteration::new(tol, max_iter).run(m)
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    if normalize(&mut v) == 0.0 {
        v[0] = 1.0;
    }
    v
}

/// Leading triplet of a dense matrix: power iteration first, then an exact
/// dense eigendecomposition of the smaller Gram matrix when the budget runs
/// out (near-tied leading values). The fallback never underestimates
/// `sigma_1` by more than rounding.
pub fn dense_top_pair(power: &PowerIteration, m: &DenseMatrix) -> SingularTriplet {
    match power.run(m) {
        Ok(t) => t,
        Err(Error::NotConverged { .. }) => {
            let f = gram_pairs(m, 0.0, 1);
            if f.rank() == 0 {
                SingularTriplet::zero(m.rows(), m.cols())
            } else {
                SingularTriplet {
                    sigma: f.singular_values()[0],
                    u: f.left(0).to_vec(),
                    v: f.right(0).to_vec(),
                }
            }
        }
        Err(e) => unreachable!("power iteration cannot fail with {e}"),
    }
}

/// Singular triplets of `m` whose singular value exceeds `threshold`.
///
/// Forms the smaller Gram matrix once and takes its dense symmetric
/// eigendecomposition. Values are recovered as `|A x|` rather than square
/// roots. Gram eigenvalues under `n * eps * lambda_1` count as zero, so
/// singular values below about `sqrt(n * eps) * sigma_1` are dropped.
pub fn partial_svd(m: &DenseMatrix, threshold: f64) -> LowRankFactorization {
    gram_pairs(m, threshold, usize::MAX)
}

fn gram_pairs(m: &DenseMatrix, threshold: f64, limit: usize) -> LowRankFactorization {
    let (rows, cols) = m.shape();
    let (gram, side) = m.small_gram();
    let n = gram.rows();
    let (eig, vectors) = symmetric_eigen(&DMatrix::from_row_slice(n, n, gram.as_slice()));
    let lambda_floor = eig.first().map_or(0.0, |&l| l.max(0.0) * f64::EPSILON * n as f64);

    let mut lefts: Vec<Vec<f64>> = Vec::new();
    let mut rights: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut floor = threshold.max(0.0);
    for (k, &lambda) in eig.iter().enumerate() {
        if values.len() >= limit || lambda <= lambda_floor {
            break;
        }
        let x: Vec<f64> = vectors.column(k).iter().copied().collect();
        let (mut u, mut v) = match side {
            GramSide::Right => {
                let mut u = vec![0.0; rows];
                m.apply(&x, &mut u);
                (u, x)
            }
            GramSide::Left => {
                let mut v = vec![0.0; cols];
                m.apply_transpose(&x, &mut v);
                (x, v)
            }
        };
        let sigma = match side {
            GramSide::Right => normalize(&mut u),
            GramSide::Left => normalize(&mut v),
        };
        if k == 0 {
            floor = floor.max(sigma * f64::EPSILON * (rows.max(cols) as f64));
        }
        if sigma <= floor {
            break;
        }
        orthogonalize(&mut u, &lefts);
        orthogonalize(&mut v, &rights);
        normalize(&mut u);
        normalize(&mut v);
        lefts.push(u);
        rights.push(v);
        values.push(sigma);
    }

    LowRankFactorization::from_sorted_parts(rows, cols, lefts, values, rights)
}

/// Two passes of classical Gram-Schmidt against orthonormal `basis`.
pub(crate) fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_unit_axis(x: &[f64], axis: usize) {
        for (i, &xi) in x.iter().enumerate() {
            let expected = if i == axis { 1.0 } else { 0.0 };
            assert!((xi.abs() - expected).abs() < 1e-9, "{x:?} is not +-e{axis}");
        }
    }

    #[test]
    fn diagonal_matrix() {
        let m = DenseMatrix::from_diag(&[3.0, 1.0]);
        let t = top_singular_pair(&m, 1e-12, 1000).unwrap();
        assert!((t.sigma - 3.0).abs() < 1e-12);
        assert_unit_axis(&t.u, 0);
        assert_unit_axis(&t.v, 0);
    }

    #[test]
    fn permuted_diagonal() {
        let m = DenseMatrix::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        let t = top_singular_pair(&m, 1e-12, 1000).unwrap();
        assert!((t.sigma - 2.0).abs() < 1e-12);
        assert_unit_axis(&t.u, 0);
        assert_unit_axis(&t.v, 1);
    }

    #[test]
    fn zero_matrix_gives_zero_sigma_and_unit_vectors() {
        let t = top_singular_pair(&DenseMatrix::zeros(3, 2), 1e-8, 10).unwrap();
        assert_eq!(t.sigma, 0.0);
        assert_eq!(norm(&t.u), 1.0);
        assert_eq!(norm(&t.v), 1.0);
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        // A near tie needs far more than one step.
        let m = DenseMatrix::from_diag(&[1.0, 0.999_999]);
        match top_singular_pair(&m, 1e-14, 1) {
            Err(Error::NotConverged { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert!(best.sigma > 0.99);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn warm_start_in_null_space_recovers() {
        let m = DenseMatrix::from_diag(&[2.0, 0.0]);
        let t = PowerIteration::new(1e-12, 100).warm_start(vec![0.0, 1.0]).run(&m).unwrap();
        assert!((t.sigma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn partial_svd_stops_at_threshold() {
        let m = DenseMatrix::from_diag(&[5.0, 3.0, 1.0]);
        let f = partial_svd(&m, 2.0);
        assert_eq!(f.rank(), 2);
        assert!((f.singular_values()[0] - 5.0).abs() < 1e-10);
        assert!((f.singular_values()[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn partial_svd_of_rank_deficient_matrix() {
        let m = DenseMatrix::from_fn(6, 4, |i, j| ((i + 1) * (j + 1)) as f64);
        let f = partial_svd(&m, 0.0);
        assert_eq!(f.rank(), 1);
    }
}
