//! Brute-force reference implementations for tests. They share no code with
//! the production paths: the SVD is one-sided Jacobi, the eigensolver is
//! cyclic Jacobi, and the metrics follow their definitions literally.

use crate::lowrank::DenseMatrix;

/// Full SVD by one-sided Jacobi rotations. Returns `(U, s, V)` with
/// `min(rows, cols)` columns each and `s` sorted nonincreasing.
pub fn jacobi_svd(m: &DenseMatrix) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let transposed = m.rows() < m.cols();
    let a = if transposed { m.transpose() } else { m.clone() };
    let (rows, cols) = a.shape();
    // columns of A and of the accumulated rotation
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols_pair in [&mut w, &mut v] {
                    for i in 0..cols_pair[p].len() {
                        let (x, y) = (cols_pair[p][i], cols_pair[q][i]);
                        cols_pair[p][i] = c * x - s * y;
                        cols_pair[q][i] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = w
        .into_iter()
        .zip(v)
        .map(|(col, vcol)| {
            let sigma = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u = if sigma > 0.0 {
                col.iter().map(|x| x / sigma).collect()
            } else {
                vec![0.0; rows]
            };
            (sigma, u, vcol)
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut us = Vec::new();
    let mut ss = Vec::new();
    let mut vs = Vec::new();
    for (s, u, vv) in triplets {
        ss.push(s);
        if transposed {
            us.push(vv);
            vs.push(u);
        } else {
            us.push(u);
            vs.push(vv);
        }
    }
    (us, ss, vs)
}

pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    jacobi_svd(m).1
}

pub fn nuclear_norm(m: &DenseMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// `argmin_X tau |X|_* + 1/2 |X - M|_F^2` from the full SVD.
pub fn svt(m: &DenseMatrix, tau: f64) -> DenseMatrix {
    let (u, s, v) = jacobi_svd(m);
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        (0..s.len()).map(|k| (s[k] - tau).max(0.0) * u[k][i] * v[k][j]).sum()
    })
}

/// Eigenvalues (nonincreasing) and eigenvectors of a symmetric matrix by
/// cyclic Jacobi.
pub fn symmetric_eigen(m: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 0.5 * (m.get(i, j) + m.get(j, i))).collect()).collect();
    let mut vecs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
                let (lo, hi) = a.split_at_mut(q);
                for (ap, aq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*ap, *aq);
                    *ap = c * x - s * y;
                    *aq = s * x + c * y;
                }
                for row in vecs.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| vecs[i][k]).collect()).collect();
    (values, vectors)
}

/// Distance from each pixel to the nearest `true` pixel by checking every pair.
pub fn distance_transform(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    let points: Vec<(usize, usize)> = (0..mask.len()).filter(|&i| mask[i]).map(|i| (i % width, i / width)).collect();
    (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            points
                .iter()
                .map(|&(px, py)| ((x - px as f64).powi(2) + (y - py as f64).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Per-frame F-measure straight from the class-averaged definitions.
pub fn f_measure(f: &[bool], g: &[bool]) -> f64 {
    let count = |a: bool, b: bool| f.iter().zip(g).filter(|&(&x, &y)| x == a && y == b).count() as f64;
    let (tp, fp, tn, fnn) = (count(true, true), count(true, false), count(false, false), count(false, true));
    let div = |a: f64, b: f64| if b == 0.0 { 1.0 } else { a / b };
    let rec = (div(tp, tp + fnn) + div(tn, tn + fp)) / 2.0;
    let prec = (div(tp, tp + fp) + div(tn, tn + fnn)) / 2.0;
    if rec + prec == 0.0 {
        0.0
    } else {
        2.0 * prec * rec / (prec + rec)
    }
}

pub fn psnr(f: &[bool], g: &[bool]) -> f64 {
    let err: f64 = f.iter().zip(g).map(|(&a, &b)| (a as u8 as f64 - b as u8 as f64).powi(2)).sum();
    if err == 0.0 {
        100.0
    } else {
        (10.0 * (f.len() as f64 / err).log10()).min(100.0)
    }
}

pub fn ssim(f: &[bool], g: &[bool]) -> f64 {
    let x: Vec<f64> = f.iter().map(|&b| 255.0 * b as u8 as f64).collect();
    let y: Vec<f64> = g.iter().map(|&b| 255.0 * b as u8 as f64).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n;
    let vy = y.iter().map(|a| (a - my).powi(2)).sum::<f64>() / n;
    let cxy = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
    let (c1, c2) = (6.5025, 58.5225);
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

pub fn d_score(f: &[bool], g: &[bool], width: usize, height: usize) -> f64 {
    let dt = distance_transform(g, width, height);
    let scores: Vec<f64> = (0..f.len())
        .filter(|&i| f[i] != g[i])
        .map(|i| {
            let d = if dt[i] < 0.5 { 0.5 } else { dt[i] };
            (-((2.0 * d).log2() - 2.5).powi(2)).exp()
        })
        .collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}
