#![allow(dead_code)]

use bgsub_core::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in [-1, 1].
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Sum of `rank` random outer products with weights `scale / (k + 1)`.
pub fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize, scale: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for k in 0..rank {
        let u = random_vector(rng, rows);
        let v = random_vector(rng, cols);
        let w = scale / (k + 1) as f64;
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m.set(i, j, m.get(i, j) + w * ui * vj);
            }
        }
    }
    m
}

pub fn random_mask(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<bool> {
    (0..n).map(|_| rng.random_bool(density)).collect()
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
