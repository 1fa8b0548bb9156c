//! Minimal faces of the nuclear-norm ball, away vertices and the largest
//! step that keeps an iterate inside its face.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::lowrank::{
    dense_top_pair, symmetric_eigen, DenseMatrix, LowRankFactorization, PowerIteration, RankOneUpdate,
    SingularTriplet,
};
use crate::report::FaceKind;

/// Bisection budget for the face-boundary step.
pub const ALPHA_STOP_MAX_BISECTIONS: usize = 30;
/// Relative tolerance on the nuclear norm at the full-ball boundary.
pub const ALPHA_STOP_TOL: f64 = 1e-6;

/// Vertex of the minimal face that maximizes `<G, .>`, with the data needed
/// to move away from it.
#[derive(Clone, Debug)]
pub struct AwayVertex {
    pub vertex: LowRankFactorization,
    pub face: FaceKind,
    pub(crate) direction: AwayDirection,
}

#[derive(Clone, Debug)]
pub(crate) enum AwayDirection {
    /// Vertex `+delta u v^T` from the leading singular pair of `G`.
    Ball(SingularTriplet),
    /// Vertex `delta U w w^T V^T`; `lambda` is the top eigenvalue of
    /// `sym(U^T G V)` with eigenvector `w`.
    Face { w: Vec<f64>, lambda: f64 },
    Singleton,
}

impl AwayVertex {
    /// `<G, vertex>` for the gradient the vertex was computed from.
    pub(crate) fn gradient_inner(&self, delta: f64) -> f64 {
        match &self.direction {
            AwayDirection::Ball(t) => delta * t.sigma,
            AwayDirection::Face { lambda, .. } => delta * lambda,
            AwayDirection::Singleton => f64::NAN,
        }
    }
}

/// 1 for a positive singular value, 0 otherwise.
pub(crate) fn indicator(sigma: f64) -> f64 {
    if sigma > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn classify_face(b: &LowRankFactorization, delta: f64, boundary_tol: f64) -> FaceKind {
    if b.rank() == 0 || b.nuclear_norm() < delta * (1.0 - boundary_tol) {
        FaceKind::FullBall
    } else if b.rank() == 1 {
        FaceKind::Singleton
    } else {
        FaceKind::Spectrahedron
    }
}

/// Away vertex on the minimal face of `b` for gradient `g`.
pub fn away_vertex_on_face(b: &LowRankFactorization, g: &DenseMatrix, delta: f64, boundary_tol: f64) -> AwayVertex {
    away_vertex_with(b, g, delta, boundary_tol, &PowerIteration::new(1e-10, 10_000))
}

pub(crate) fn away_vertex_with(
    b: &LowRankFactorization,
    g: &DenseMatrix,
    delta: f64,
    boundary_tol: f64,
    power: &PowerIteration,
) -> AwayVertex {
    match classify_face(b, delta, boundary_tol) {
        FaceKind::FullBall => {
            let t = dense_top_pair(power, g);
            AwayVertex {
                vertex: LowRankFactorization::rank_one(delta * indicator(t.sigma), &t.u, &t.v),
                face: FaceKind::FullBall,
                direction: AwayDirection::Ball(t),
            }
        }
        FaceKind::Singleton => AwayVertex {
            vertex: b.clone(),
            face: FaceKind::Singleton,
            direction: AwayDirection::Singleton,
        },
        FaceKind::Spectrahedron => {
            let (values, vectors) = symmetric_eigen(&b.project(g));
            let w: Vec<f64> = vectors.column(0).iter().copied().collect();
            let lift = |basis: &[Vec<f64>], n: usize| {
                let mut out = vec![0.0; n];
                for (col, &wk) in basis.iter().zip(&w) {
                    for (o, &x) in out.iter_mut().zip(col) {
                        *o += wk * x;
                    }
                }
                out
            };
            let uw = lift(b.left_columns(), b.rows());
            let vw = lift(b.right_columns(), b.cols());
            AwayVertex {
                vertex: LowRankFactorization::rank_one(delta, &uw, &vw),
                face: FaceKind::Spectrahedron,
                direction: AwayDirection::Face { w, lambda: values[0] },
            }
        }
    }
}

/// Largest `alpha` with `b + alpha (b - vertex)` still in the minimal face.
///
/// On the full ball this bisects on the nuclear norm until it is within
/// `1e-6 * delta` of the radius. On a spectrahedral face it bisects on
/// `t = alpha / (1 + alpha)` with a Cholesky test of `M - t M_hat`, where
/// `M = diag(s)`, so the returned point keeps a positive semidefinite core.
pub fn alpha_stop(b: &LowRankFactorization, away: &AwayVertex, delta: f64) -> Result<f64> {
    match &away.direction {
        AwayDirection::Singleton => Err(Error::ZeroDirection),
        AwayDirection::Ball(t) => {
            if t.sigma == 0.0 && b.rank() == 0 {
                return Err(Error::ZeroDirection);
            }
            Ok(ball_alpha_stop(&RankOneUpdate::new(b, &t.u, &t.v), delta))
        }
        AwayDirection::Face { w, .. } => Ok(face_alpha_stop(b.singular_values(), w, delta)),
    }
}

/// `b + alpha q` with `q = b - delta u v^T` equals `(1 + alpha) b - alpha delta u v^T`.
pub(crate) fn ball_alpha_stop(update: &RankOneUpdate<'_>, delta: f64) -> f64 {
    let norm_at = |alpha: f64| update.nuclear_norm(1.0 + alpha, -alpha * delta);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while norm_at(hi) <= delta {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return lo;
        }
    }
    for _ in 0..ALPHA_STOP_MAX_BISECTIONS {
        if delta - norm_at(lo) <= ALPHA_STOP_TOL * delta {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(crate) fn face_alpha_stop(values: &[f64], w: &[f64], delta: f64) -> f64 {
    let positive_definite = |t: f64| {
        let m = DMatrix::from_fn(values.len(), values.len(), |i, j| {
            let d = if i == j { values[i] } else { 0.0 };
            d - t * delta * w[i] * w[j]
        });
        Cholesky::new(m).is_some()
    };
    // t = 1 gives trace(M) - delta <= 0 with a nonzero matrix: never PD.
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..ALPHA_STOP_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if positive_definite(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo / (1.0 - lo)
}

/// Core `(1 + alpha) M - alpha delta w w^T` of `b + alpha q` on a spectrahedral face.
pub(crate) fn face_core(values: &[f64], w: &[f64], delta: f64, alpha: f64) -> DMatrix<f64> {
    DMatrix::from_fn(values.len(), values.len(), |i, j| {
        let d = if i == j { (1.0 + alpha) * values[i] } else { 0.0 };
        d - alpha * delta * w[i] * w[j]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        v
    }

    #[test]
    fn interior_away_vertex_is_sign_flipped_lmo() {
        let b = LowRankFactorization::zero(2, 2);
        let g = DenseMatrix::from_diag(&[2.0, 1.0]);
        let away = away_vertex_on_face(&b, &g, 1.0, 1e-6);
        assert_eq!(away.face, FaceKind::FullBall);
        let m = away.vertex.materialize().unwrap();
        let want = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert!(m.sub(&want).frobenius_norm() < 1e-9);
    }

    #[test]
    fn rank_one_boundary_point_is_singleton() {
        let b = LowRankFactorization::new(2, 2, vec![e(2, 0)], vec![3.0], vec![e(2, 1)]).unwrap();
        let g = DenseMatrix::from_diag(&[2.0, 1.0]);
        let away = away_vertex_on_face(&b, &g, 3.0, 1e-6);
        assert_eq!(away.face, FaceKind::Singleton);
        assert_eq!(away.vertex, b);
        assert!(matches!(alpha_stop(&b, &away, 3.0), Err(Error::ZeroDirection)));
    }

    #[test]
    fn alpha_stop_from_origin_is_one() {
        let b = LowRankFactorization::zero(3, 2);
        let g = DenseMatrix::from_fn(3, 2, |i, j| if i == 1 && j == 0 { -4.0 } else { 0.0 });
        let away = away_vertex_on_face(&b, &g, 2.5, 1e-6);
        let a = alpha_stop(&b, &away, 2.5).unwrap();
        assert!((a - 1.0).abs() < 1e-6, "alpha_stop = {a}");
    }

    #[test]
    fn spectrahedron_alpha_stop_two_by_two() {
        // M = diag(d/2, d/2), M_hat = d e1 e1^T: eigenvalue d/2 - alpha d/2 hits 0 at 1.
        let delta = 2.0;
        let a = face_alpha_stop(&[1.0, 1.0], &[1.0, 0.0], delta);
        assert!((a - 1.0).abs() < 1e-6, "alpha_stop = {a}");
    }
}
