use nalgebra::DMatrix;

use super::dense::{dot, norm, DenseMatrix, LinearOperator};
use super::power::orthogonalize;
use crate::error::{Error, Result};

/// Largest number of entries [`LowRankFactorization::materialize`] will
/// allocate (1 GiB of `f64`).
pub const DEFAULT_MATERIALIZE_BUDGET: usize = 1 << 27;

/// Column drift (Frobenius norm of `X^T X - I`) beyond which factors are
/// re-orthonormalized.
pub const REORTHONORMALIZE_TOL: f64 = 1e-6;

/// Orthonormality required of a factorization built from user input.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Thin SVD `U diag(s) V^T` with `s` positive and nonincreasing.
///
/// The rank may be zero, which represents the zero matrix of the given
/// shape.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactorization {
    rows: usize,
    cols: usize,
    left: Vec<Vec<f64>>,
    values: Vec<f64>,
    right: Vec<Vec<f64>>,
}

impl LowRankFactorization {
    pub fn zero(rows: usize, cols: usize) -> Self {
        LowRankFactorization {
            rows,
            cols,
            left: Vec::new(),
            values: Vec::new(),
            right: Vec::new(),
        }
    }

    /// Validating constructor; `left[k]` and `right[k]` are the k-th
    /// singular vectors.
    pub fn new(
        rows: usize,
        cols: usize,
        left: Vec<Vec<f64>>,
        values: Vec<f64>,
        right: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidFactorization(msg));
        if left.len() != values.len() || right.len() != values.len() {
            return bad("factor column counts differ from the number of singular values".into());
        }
        if values.len() > rows.min(cols) {
            return bad(format!("rank {} exceeds min({rows}, {cols})", values.len()));
        }
        if left.iter().any(|c| c.len() != rows) || right.iter().any(|c| c.len() != cols) {
            return bad("factor column has the wrong length".into());
        }
        if values.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("singular values must be finite and positive".into());
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return bad("singular values must be nonincreasing".into());
        }
        let f = LowRankFactorization {
            rows,
            cols,
            left,
            values,
            right,
        };
        let drift = f.orthonormality_error();
        if drift > ORTHONORMALITY_TOL {
            return bad(format!("factors deviate from orthonormal by {drift:e}"));
        }
        Ok(f)
    }

    /// Sorts triplets by value and drops non-positive ones. Callers
    /// guarantee orthonormal columns.
    pub(crate) fn from_sorted_parts(
        rows: usize,
        cols: usize,
        left: Vec<Vec<f64>>,
        values: Vec<f64>,
        right: Vec<Vec<f64>>,
    ) -> Self {
        let mut order: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.0).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        LowRankFactorization {
            rows,
            cols,
            left: order.iter().map(|&k| left[k].clone()).collect(),
            values: order.iter().map(|&k| values[k]).collect(),
            right: order.iter().map(|&k| right[k].clone()).collect(),
        }
    }

    /// Rank-1 matrix `scale * u v^T` for unit `u`, `v`.
    pub fn rank_one(scale: f64, u: &[f64], v: &[f64]) -> Self {
        let (rows, cols) = (u.len(), v.len());
        if scale == 0.0 {
            return Self::zero(rows, cols);
        }
        let sign = scale.signum();
        LowRankFactorization {
            rows,
            cols,
            left: vec![u.iter().map(|x| sign * x).collect()],
            values: vec![scale.abs()],
            right: vec![v.to_vec()],
        }
    }

    /// Thin SVD of a dense matrix, keeping values above `rank_tol * s_1`.
    pub fn from_dense(m: &DenseMatrix, rank_tol: f64) -> Self {
        let mat = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
        let (u, s, v) = small_svd(&mat);
        let cutoff = s.first().copied().unwrap_or(0.0) * rank_tol;
        let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > cutoff && s[k] > 0.0).collect();
        LowRankFactorization {
            rows: m.rows(),
            cols: m.cols(),
            left: keep.iter().map(|&k| u.column(k).iter().copied().collect()).collect(),
            values: keep.iter().map(|&k| s[k]).collect(),
            right: keep.iter().map(|&k| v.column(k).iter().copied().collect()).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.values
    }

    pub fn left(&self, k: usize) -> &[f64] {
        &self.left[k]
    }

    pub fn right(&self, k: usize) -> &[f64] {
        &self.right[k]
    }

    pub fn left_columns(&self) -> &[Vec<f64>] {
        &self.left
    }

    pub fn right_columns(&self) -> &[Vec<f64>] {
        &self.right
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|s| s * s).sum()
    }

    /// Column `j` of `U diag(s) V^T`, without forming the matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for k in 0..self.rank() {
            let a = self.values[k] * self.right[k][j];
            for (o, &u) in out.iter_mut().zip(&self.left[k]) {
                *o += a * u;
            }
        }
        out
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.materialize_within(DEFAULT_MATERIALIZE_BUDGET)
    }

    pub fn materialize_within(&self, budget: usize) -> Result<DenseMatrix> {
        let entries = self.rows.saturating_mul(self.cols);
        if entries > budget {
            return Err(Error::BudgetExceeded {
                rows: self.rows,
                cols: self.cols,
                budget,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        let cols = self.cols;
        let data = out.as_mut_slice();
        for k in 0..self.rank() {
            let v = &self.right[k];
            for (i, &u) in self.left[k].iter().enumerate() {
                let a = self.values[k] * u;
                if a != 0.0 {
                    for (o, &vj) in data[i * cols..(i + 1) * cols].iter_mut().zip(v) {
                        *o += a * vj;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest of `|U^T U - I|_F` and `|V^T V - I|_F`.
    pub fn orthonormality_error(&self) -> f64 {
        gram_deviation(&self.left).max(gram_deviation(&self.right))
    }

    /// Rebuilds orthonormal factors via QR and a small core SVD.
    pub fn reorthonormalize(&self, rank_tol: f64) -> Self {
        if self.rank() == 0 {
            return self.clone();
        }
        let r = self.rank();
        let qr_of = |cols: &[Vec<f64>], n: usize| {
            let m = DMatrix::from_fn(n, r, |i, k| cols[k][i]);
            let qr = m.qr();
            (qr.q(), qr.r())
        };
        let (qu, ru) = qr_of(&self.left, self.rows);
        let (qv, rv) = qr_of(&self.right, self.cols);
        let core = &ru * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.values)) * rv.transpose();
        let basis_u: Vec<Vec<f64>> = (0..r).map(|k| qu.column(k).iter().copied().collect()).collect();
        let basis_v: Vec<Vec<f64>> = (0..r).map(|k| qv.column(k).iter().copied().collect()).collect();
        factor_from_core(self.rows, self.cols, &basis_u, &basis_v, &core, rank_tol)
    }

    /// `U^T G V` as an `r x r` matrix.
    pub fn project(&self, g: &DenseMatrix) -> DMatrix<f64> {
        let r = self.rank();
        let mut gv = vec![0.0; self.rows];
        let mut out = DMatrix::zeros(r, r);
        for b in 0..r {
            g.apply(&self.right[b], &mut gv);
            for a in 0..r {
                out[(a, b)] = dot(&self.left[a], &gv);
            }
        }
        out
    }

    /// `<G, U diag(s) V^T>`.
    pub fn inner(&self, g: &DenseMatrix) -> f64 {
        let mut gv = vec![0.0; self.rows];
        let mut total = 0.0;
        for k in 0..self.rank() {
            g.apply(&self.right[k], &mut gv);
            total += self.values[k] * dot(&self.left[k], &gv);
        }
        total
    }

    /// `U M V^T` for a symmetric positive semidefinite core `M` given by its
    /// eigendecomposition `W diag(eig) W^T`; eigenvalues at or below
    /// `cutoff` are dropped.
    pub(crate) fn with_symmetric_core(&self, vectors: &DMatrix<f64>, eig: &[f64], cutoff: f64) -> Self {
        let keep: Vec<usize> = (0..eig.len()).filter(|&k| eig[k] > cutoff && eig[k] > 0.0).collect();
        let combine = |basis: &[Vec<f64>], n: usize| -> Vec<Vec<f64>> {
            keep.iter()
                .map(|&k| {
                    let mut col = vec![0.0; n];
                    for (i, b) in basis.iter().enumerate() {
                        let w = vectors[(i, k)];
                        for (c, &x) in col.iter_mut().zip(b) {
                            *c += w * x;
                        }
                    }
                    col
                })
                .collect()
        };
        let left = combine(&self.left, self.rows);
        let right = combine(&self.right, self.cols);
        let values = keep.iter().map(|&k| eig[k]).collect();
        Self::from_sorted_parts(self.rows, self.cols, left, values, right)
    }
}

impl LinearOperator for LowRankFactorization {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.rank() {
            let a = self.values[k] * dot(&self.right[k], x);
            for (o, &u) in y.iter_mut().zip(&self.left[k]) {
                *o += a * u;
            }
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.rank() {
            let a = self.values[k] * dot(&self.left[k], y);
            for (o, &v) in x.iter_mut().zip(&self.right[k]) {
                *o += a * v;
            }
        }
    }
}

/// The family `a * B + c * x y^T` for fixed `B`, `x`, `y`.
///
/// `x` and `y` are split once into components inside and orthogonal to the
/// factor spans, so every member reduces to an `(r+1) x (r+1)` core whose SVD
/// gives nuclear norms and refactorizations without touching `n1 x n2` data.
pub struct RankOneUpdate<'a> {
    base: &'a LowRankFactorization,
    x_coef: Vec<f64>,
    y_coef: Vec<f64>,
    x_perp: Option<Vec<f64>>,
    y_perp: Option<Vec<f64>>,
}

impl<'a> RankOneUpdate<'a> {
    pub fn new(base: &'a LowRankFactorization, x: &[f64], y: &[f64]) -> Self {
        let (x_coef, x_perp) = split(&base.left, x);
        let (y_coef, y_perp) = split(&base.right, y);
        RankOneUpdate {
            base,
            x_coef,
            y_coef,
            x_perp,
            y_perp,
        }
    }

    /// Core matrix `K` with `a B + c x y^T = [U x'] K [V y']^T`.
    pub fn core(&self, a: f64, c: f64) -> DMatrix<f64> {
        let nl = self.x_coef.len();
        let nr = self.y_coef.len();
        let mut k = DMatrix::from_fn(nl, nr, |i, j| c * self.x_coef[i] * self.y_coef[j]);
        for (i, &s) in self.base.values.iter().enumerate() {
            k[(i, i)] += a * s;
        }
        k
    }

    pub fn nuclear_norm(&self, a: f64, c: f64) -> f64 {
        self.core(a, c).singular_values().iter().sum()
    }

    pub fn frobenius_norm_sq(&self, a: f64, c: f64) -> f64 {
        self.core(a, c).norm_squared()
    }

    pub fn factor(&self, a: f64, c: f64, rank_tol: f64) -> LowRankFactorization {
        let mut basis_u = self.base.left.clone();
        basis_u.extend(self.x_perp.iter().cloned());
        let mut basis_v = self.base.right.clone();
        basis_v.extend(self.y_perp.iter().cloned());
        factor_from_core(self.base.rows, self.base.cols, &basis_u, &basis_v, &self.core(a, c), rank_tol)
    }
}

/// Coefficients of `x` in `basis`, plus the normalized orthogonal remainder
/// when it is not negligible. The last coefficient is the remainder's norm.
fn split(basis: &[Vec<f64>], x: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let scale = norm(x);
    let mut coef: Vec<f64> = basis.iter().map(|b| dot(b, x)).collect();
    let mut rest = x.to_vec();
    orthogonalize(&mut rest, basis);
    let rho = norm(&rest);
    if scale == 0.0 || rho <= 1e-12 * scale {
        return (coef, None);
    }
    rest.iter_mut().for_each(|v| *v /= rho);
    coef.push(rho);
    (coef, Some(rest))
}

fn factor_from_core(
    rows: usize,
    cols: usize,
    basis_u: &[Vec<f64>],
    basis_v: &[Vec<f64>],
    core: &DMatrix<f64>,
    rank_tol: f64,
) -> LowRankFactorization {
    let (w, s, z) = small_svd(core);
    let cutoff = s.first().copied().unwrap_or(0.0) * rank_tol;
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > cutoff && s[k] > 0.0).collect();
    let combine = |basis: &[Vec<f64>], coeffs: &DMatrix<f64>, n: usize| -> Vec<Vec<f64>> {
        keep.iter()
            .map(|&k| {
                let mut col = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    let c = coeffs[(i, k)];
                    if c != 0.0 {
                        for (o, &x) in col.iter_mut().zip(b) {
                            *o += c * x;
                        }
                    }
                }
                col
            })
            .collect()
    };
    LowRankFactorization {
        rows,
        cols,
        left: combine(basis_u, &w, rows),
        values: keep.iter().map(|&k| s[k]).collect(),
        right: combine(basis_v, &z, cols),
    }
}

/// SVD of a small dense matrix with values sorted nonincreasing.
/// Returns `(U, s, V)` with `M = U diag(s) V^T`.
///
/// nalgebra's SVD with vectors can be far off on nearly diagonal input,
/// which is the usual shape of update cores. Its result is kept only when
/// it reconstructs `M` with orthonormal factors to `8 eps (rows + cols)`;
/// otherwise the pairs come from the symmetric eigenproblem of
/// `[0 M; M^T 0]`.
pub(crate) fn small_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let tol = 8.0 * f64::EPSILON * (rows + cols) as f64;
    let (u, s, v) = if svd_defect(m, &u, &s, &v) <= tol {
        (u, s, v)
    } else {
        embedded_svd(m)
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_sorted = DMatrix::from_fn(rows, order.len(), |i, k| u[(i, order[k])]);
    let v_sorted = DMatrix::from_fn(cols, order.len(), |j, k| v[(j, order[k])]);
    (u_sorted, order.iter().map(|&k| s[k]).collect(), v_sorted)
}

/// Largest of the relative reconstruction error and the orthonormality
/// defects of `U` and `V`.
fn svd_defect(m: &DMatrix<f64>, u: &DMatrix<f64>, s: &[f64], v: &DMatrix<f64>) -> f64 {
    let k = s.len();
    let scaled = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, j)] * s[j]);
    let residual = (scaled * v.transpose() - m).norm();
    let norm = m.norm();
    let reconstruction = if norm > 0.0 { residual / norm } else { residual };
    let identity = DMatrix::<f64>::identity(k, k);
    let du = (u.transpose() * u - &identity).norm();
    let dv = (v.transpose() * v - &identity).norm();
    reconstruction.max(du).max(dv)
}

/// SVD through the eigenpairs `(+-s, [u; +-v] / sqrt 2)` of `[0 M; M^T 0]`.
/// Tall and wide inputs are first reduced to square by QR.
fn embedded_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if rows > cols {
        let qr = m.clone().qr();
        let (u, s, v) = embedded_svd(&qr.r());
        return (qr.q() * u, s, v);
    }
    if cols > rows {
        let (v, s, u) = embedded_svd(&m.transpose());
        return (u, s, v);
    }
    let n = rows;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(m);
    h.view_mut((n, 0), (n, n)).copy_from(&m.transpose());
    let (values, vectors) = symmetric_eigen(&h);
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..n {
        let x = vectors.column(k);
        u.set_column(k, &x.rows(0, n));
        v.set_column(k, &x.rows(n, n));
    }
    // pairs of tiny singular values mix with their negatives
    orthonormalize_columns(&mut u);
    orthonormalize_columns(&mut v);
    (u, values[..n].iter().map(|&s| s.max(0.0)).collect(), v)
}

/// Two passes of Gram-Schmidt, left to right; zero columns stay zero.
fn orthonormalize_columns(m: &mut DMatrix<f64>) {
    for k in 0..m.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let c = m.column(j).dot(&m.column(k));
                let prev = m.column(j).into_owned();
                m.column_mut(k).axpy(-c, &prev, 1.0);
            }
        }
        let n = m.column(k).norm();
        if n > 0.0 {
            m.column_mut(k).unscale_mut(n);
        }
    }
}

/// Eigendecomposition of a small symmetric matrix, eigenvalues sorted
/// nonincreasing. Returns `(values, vectors)` with vectors as columns.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, k| eig.eigenvectors[(i, order[k])]);
    (order.iter().map(|&k| eig.eigenvalues[k]).collect(), vectors)
}

fn gram_deviation(cols: &[Vec<f64>]) -> f64 {
    let mut sq = 0.0;
    for (a, ca) in cols.iter().enumerate() {
        for (b, cb) in cols.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            sq += (dot(ca, cb) - target).powi(2);
        }
    }
    sq.sqrt()
}
