//! Nuclear-norm constrained least squares by Frank-Wolfe with in-face steps.
//!
//! Minimizes `f(B) = 1/2 |P(B - V)|_F^2` subject to `|B|_* <= delta`, where
//! `P` keeps the observed entries. Iterates are kept as thin SVDs; a regular
//! Frank-Wolfe step adds at most one rank, and in-face steps move inside the
//! minimal face of the current iterate so they never add rank on the sphere.

mod config;
mod face;

use std::time::Instant;

use nalgebra::DMatrix;

pub use config::{FwConfig, StepRule, DEFAULT_DELTA_SCALE};
pub use face::{
    alpha_stop, away_vertex_on_face, classify_face, AwayVertex, ALPHA_STOP_MAX_BISECTIONS, ALPHA_STOP_TOL,
};

use crate::error::{Error, Result};
use crate::lowrank::{
    dense_top_pair, symmetric_eigen, DenseMatrix, EntryMask, LowRankFactorization, PowerIteration, RankOneUpdate,
    SingularTriplet, REORTHONORMALIZE_TOL,
};
use crate::report::{FaceKind, IterationRecord, SolverReport, StepKind, Termination};
use face::{away_vertex_with, indicator, ball_alpha_stop, face_alpha_stop, face_core, AwayDirection};

/// `argmin <G, X>` over `|X|_* <= delta`: `-delta u_1 v_1^T`, or zero when `G = 0`.
pub fn linear_minimization_oracle(g: &DenseMatrix, delta: f64) -> LowRankFactorization {
    let t = dense_top_pair(&PowerIteration::new(1e-10, 1000), g);
    LowRankFactorization::rank_one(-delta * indicator(t.sigma), &t.u, &t.v)
}

/// Minimizer of `1/2 |B + alpha q - V|_F^2` over `[0, alpha_max]`.
pub fn exact_line_search(b: &DenseMatrix, v: &DenseMatrix, q: &DenseMatrix, alpha_max: f64) -> f64 {
    let descent = v.sub(b).frobenius_dot(q);
    clamped_step(-descent, q.frobenius_norm_sq(), alpha_max)
}

/// Minimizer over `[0, alpha_max]` of `alpha * gq + alpha^2 qq / 2`.
fn clamped_step(gq: f64, qq: f64, alpha_max: f64) -> f64 {
    if qq <= 0.0 {
        return 0.0;
    }
    (-gq / qq).clamp(0.0, alpha_max)
}

/// Exact gradient recomputation interval for the incremental update.
pub const GRADIENT_REFRESH: usize = 16;

/// `B' = a B + c x y^T` for unit vectors `x`, `y`.
#[derive(Clone, Copy)]
struct Affine<'v> {
    a: f64,
    c: f64,
    x: &'v [f64],
    y: &'v [f64],
}

/// Iterate of the solver together with its gradient.
#[derive(Clone, Debug)]
pub struct FwState {
    pub factor: LowRankFactorization,
    /// Best certified lower bound on the optimal value so far.
    pub lower_bound: f64,
    pub iter: usize,
    pub objective: f64,
    pub last_step: StepKind,
    pub last_face: Option<FaceKind>,
    gradient: DenseMatrix,
    /// `<G, B>`
    grad_inner: f64,
    /// Whether `objective`, `gradient` and `grad_inner` were evaluated from
    /// the factor rather than updated incrementally.
    exact: bool,
}

impl FwState {
    pub fn bound_gap(&self) -> f64 {
        self.objective - self.lower_bound
    }

    pub fn gradient(&self) -> &DenseMatrix {
        &self.gradient
    }
}

/// One instance of the problem with its configuration.
pub struct FwSolver<'a> {
    v: &'a DenseMatrix,
    mask: Option<&'a EntryMask>,
    config: FwConfig,
    delta: f64,
    margin1: f64,
    margin2: f64,
    oracle_calls: u64,
}

impl<'a> FwSolver<'a> {
    /// Validates inputs and fixes the radius. A mask that includes every
    /// entry is the unmasked problem and is dropped.
    pub fn new(v: &'a DenseMatrix, mask: Option<&'a EntryMask>, config: FwConfig) -> Result<Self> {
        config.validate()?;
        v.check_finite()?;
        if let Some(m) = mask {
            if m.shape() != v.shape() {
                return Err(Error::DimensionMismatch {
                    expected: v.shape(),
                    found: m.shape(),
                });
            }
        }
        let mask = mask.filter(|m| !m.is_full());
        let mut solver = FwSolver {
            v,
            mask,
            config,
            delta: 1.0,
            margin1: 0.0,
            margin2: 0.0,
            oracle_calls: 0,
        };
        solver.delta = match solver.config.delta {
            Some(d) => d,
            None => {
                let t = solver.top_pair(&solver.masked_observation());
                if t.sigma > 0.0 {
                    DEFAULT_DELTA_SCALE * t.sigma
                } else {
                    1.0
                }
            }
        };
        let diameter = solver.config.diameter.unwrap_or(2.0 * solver.delta);
        let denom = 2.0 * solver.config.lipschitz * diameter * diameter;
        solver.margin1 = solver.config.gamma1 / denom;
        solver.margin2 = solver.config.gamma2 / denom;
        Ok(solver)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn config(&self) -> &FwConfig {
        &self.config
    }

    fn masked_observation(&self) -> DenseMatrix {
        let mut m = self.v.clone();
        if let Some(mask) = self.mask {
            mask.apply_to(&mut m);
        }
        m
    }

    /// Leading singular pair from a fresh seeded start. Restarting from the
    /// previous vector can lock onto a pair that is no longer the top one,
    /// which would overstate the Wolfe bound.
    fn top_pair(&mut self, g: &DenseMatrix) -> SingularTriplet {
        let seed = self.config.seed.wrapping_add(self.oracle_calls);
        self.oracle_calls += 1;
        let power = PowerIteration::new(self.config.power_tol, self.config.power_max_iter).seed(seed);
        dense_top_pair(&power, g)
    }

    /// `f`, `G` and `<G, B>` at `factor`.
    fn evaluate(&self, factor: &LowRankFactorization) -> Result<(f64, DenseMatrix, f64)> {
        let mut g = factor.materialize()?;
        g.axpy(-1.0, self.v);
        if let Some(mask) = self.mask {
            mask.apply_to(&mut g);
        }
        let objective = 0.5 * g.frobenius_norm_sq();
        let inner = factor.inner(&g);
        Ok((objective, g, inner))
    }

    /// `|P(X)|_F^2` for `X = a B + c x y^T`.
    fn direction_norm_sq(&self, update: &RankOneUpdate<'_>, a: f64, c: f64) -> Result<f64> {
        match self.mask {
            None => Ok(update.frobenius_norm_sq(a, c)),
            Some(mask) => masked_norm_sq(&update.factor(a, c, 0.0).materialize()?, mask),
        }
    }

    /// Starting point `B0 = LMO(grad f(0))` with the Wolfe bound at zero.
    pub fn initial_state(&mut self) -> Result<FwState> {
        let g0 = self.masked_observation().scale(-1.0);
        let t = self.top_pair(&g0);
        let factor = LowRankFactorization::rank_one(-self.delta * indicator(t.sigma), &t.u, &t.v);
        let f_zero = 0.5 * g0.frobenius_norm_sq();
        // f(0) + <grad f(0), B0 - 0>
        let lower_bound = f_zero - self.delta * t.sigma;
        let (objective, gradient, grad_inner) = self.evaluate(&factor)?;
        Ok(FwState {
            factor,
            lower_bound,
            iter: 0,
            objective,
            last_step: StepKind::Init,
            last_face: None,
            gradient,
            grad_inner,
            exact: true,
        })
    }

    fn commit(
        &self,
        state: &mut FwState,
        mut factor: LowRankFactorization,
        step: StepKind,
        face: Option<FaceKind>,
        affine: Option<Affine<'_>>,
    ) -> Result<()> {
        let mut exact = self.mask.is_some() || (state.iter + 1).is_multiple_of(GRADIENT_REFRESH);
        if factor.orthonormality_error() > REORTHONORMALIZE_TOL {
            factor = factor.reorthonormalize(self.config.rank_tol);
            exact = true;
        }
        match affine {
            Some(affine) if !exact => self.advance(state, affine),
            _ => {
                let (objective, gradient, grad_inner) = self.evaluate(&factor)?;
                state.objective = objective;
                state.gradient = gradient;
                state.grad_inner = grad_inner;
                exact = true;
            }
        }
        state.factor = factor;
        state.exact = exact;
        state.iter += 1;
        state.last_step = step;
        state.last_face = face;
        Ok(())
    }

    /// Unmasked gradient update `G' = a G + (a - 1) V + c x y^T` in one pass,
    /// with `f = |G'|^2 / 2` and `<G', B'> = |G'|^2 + <G', V>`.
    fn advance(&self, state: &mut FwState, Affine { a, c, x, y }: Affine<'_>) {
        let cols = self.v.cols();
        let b = a - 1.0;
        let mut gg = 0.0;
        let mut gv = 0.0;
        let rows = state.gradient.as_mut_slice().chunks_exact_mut(cols);
        for ((g, v), &xi) in rows.zip(self.v.as_slice().chunks_exact(cols)).zip(x) {
            let cx = c * xi;
            let (mut row_gg, mut row_gv) = (0.0, 0.0);
            for ((gj, &vj), &yj) in g.iter_mut().zip(v).zip(y) {
                let val = a * *gj + b * vj + cx * yj;
                *gj = val;
                row_gg += val * val;
                row_gv += val * vj;
            }
            gg += row_gg;
            gv += row_gv;
        }
        state.objective = 0.5 * gg;
        state.grad_inner = gg + gv;
    }

    /// Re-evaluates an incrementally updated state from its factor.
    fn refresh(&self, state: &mut FwState) -> Result<()> {
        if !state.exact {
            let (objective, gradient, grad_inner) = self.evaluate(&state.factor)?;
            state.objective = objective;
            state.gradient = gradient;
            state.grad_inner = grad_inner;
            state.exact = true;
        }
        Ok(())
    }

    /// Classic Frank-Wolfe step with the Wolfe bound update.
    pub fn fw_step(&mut self, state: &mut FwState) -> Result<()> {
        let g = state.gradient.clone();
        let t = self.top_pair(&g);
        self.fw_step_with(state, &t, None)
    }

    fn fw_step_with(&mut self, state: &mut FwState, t: &SingularTriplet, face: Option<FaceKind>) -> Result<()> {
        // x~ = -delta u v^T, <G, x~> = -delta sigma; x~ = 0 when G = 0
        let delta = self.delta * indicator(t.sigma);
        let lin = -delta * t.sigma;
        let wolfe = state.objective + lin - state.grad_inner;
        state.lower_bound = state.lower_bound.max(wolfe);

        let update = RankOneUpdate::new(&state.factor, &t.u, &t.v);
        let alpha = match self.config.step_rule {
            StepRule::ExactLineSearch => {
                // d = x~ - B = -B - delta u v^T
                let dd = self.direction_norm_sq(&update, -1.0, -delta)?;
                clamped_step(lin - state.grad_inner, dd, 1.0)
            }
            StepRule::Harmonic => (2.0 / (state.iter as f64 + 2.0)).min(1.0),
        };
        let next = update.factor(1.0 - alpha, -alpha * delta, self.config.rank_tol);
        let affine = Affine {
            a: 1.0 - alpha,
            c: -alpha * delta,
            x: &t.u,
            y: &t.v,
        };
        self.commit(state, next, StepKind::RegularFw, face, Some(affine))
    }

    /// In-face step: moves away from the worst vertex of the minimal face,
    /// preferring the face boundary, then a line-searched point, and falls
    /// back to a regular Frank-Wolfe step when neither improves the bound gap
    /// enough.
    pub fn in_face_step(&mut self, state: &mut FwState) -> Result<()> {
        let delta = self.delta;
        let face = classify_face(&state.factor, delta, self.config.boundary_tol);
        let away = match face {
            FaceKind::Singleton => {
                return self.fw_step_with_fresh_pair(state, Some(face));
            }
            FaceKind::FullBall => {
                let g = state.gradient.clone();
                let t = self.top_pair(&g);
                AwayVertex {
                    vertex: LowRankFactorization::rank_one(delta * indicator(t.sigma), &t.u, &t.v),
                    face,
                    direction: AwayDirection::Ball(t),
                }
            }
            FaceKind::Spectrahedron => {
                let power = PowerIteration::new(self.config.power_tol, self.config.power_max_iter);
                away_vertex_with(&state.factor, &state.gradient, delta, self.config.boundary_tol, &power)
            }
        };

        // q = B - B_hat
        let gq = state.grad_inner - away.gradient_inner(delta);
        let candidates = match &away.direction {
            AwayDirection::Ball(t) => {
                let update = RankOneUpdate::new(&state.factor, &t.u, &t.v);
                let qq = self.direction_norm_sq(&update, 1.0, -delta)?;
                if qq <= 0.0 {
                    None
                } else {
                    let stop = ball_alpha_stop(&update, delta);
                    let beta = clamped_step(gq, qq, stop);
                    let rank_tol = self.config.rank_tol;
                    Some((
                        stop,
                        beta,
                        qq,
                        Box::new(move |alpha: f64, _boundary: bool| update.factor(1.0 + alpha, -alpha * delta, rank_tol))
                            as Box<dyn Fn(f64, bool) -> LowRankFactorization + '_>,
                    ))
                }
            }
            AwayDirection::Face { w, .. } => {
                let values = state.factor.singular_values().to_vec();
                let diff = face_core(&values, w, delta, 1.0) - DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&values));
                // (1 + 1) M - delta w w^T - M = M - M_hat
                let qq = match self.mask {
                    None => diff.norm_squared(),
                    Some(mask) => masked_norm_sq(&core_product(&state.factor, &diff), mask)?,
                };
                if qq <= 0.0 {
                    None
                } else {
                    let stop = face_alpha_stop(&values, w, delta);
                    let beta = clamped_step(gq, qq, stop);
                    let base = &state.factor;
                    let w = w.clone();
                    let rank_tol = self.config.rank_tol;
                    Some((
                        stop,
                        beta,
                        qq,
                        Box::new(move |alpha: f64, boundary: bool| {
                            let (eig, vectors) = symmetric_eigen(&face_core(&values, &w, delta, alpha));
                            let top = eig.first().copied().unwrap_or(0.0);
                            let mut cutoff = rank_tol * top;
                            if boundary {
                                // landing on the relative boundary zeroes the smallest eigenvalue
                                cutoff = cutoff.max(eig.last().copied().unwrap_or(0.0));
                            }
                            base.with_symmetric_core(&vectors, &eig, cutoff)
                        }) as Box<dyn Fn(f64, bool) -> LowRankFactorization + '_>,
                    ))
                }
            }
            AwayDirection::Singleton => None,
        };

        let chosen = candidates.and_then(|(stop, beta, qq, build)| {
            let f = state.objective;
            let value_at = |alpha: f64| f + alpha * gq + 0.5 * alpha * alpha * qq;
            if stop > 0.0 && self.accepts(state, value_at(stop), self.margin1) {
                Some((build(stop, true), StepKind::InFaceBoundary, stop))
            } else if beta > 0.0 && self.accepts(state, value_at(beta), self.margin2) {
                Some((build(beta, beta >= stop), StepKind::InFaceInterior, beta))
            } else {
                None
            }
        });

        match chosen {
            Some((next, step, alpha)) => {
                // B + alpha (B - vertex), vertex = delta x y^T
                let vertex = &away.vertex;
                let affine = (vertex.rank() == 1).then(|| Affine {
                    a: 1.0 + alpha,
                    c: -alpha * vertex.singular_values()[0],
                    x: vertex.left(0),
                    y: vertex.right(0),
                });
                self.commit(state, next, step, Some(face), affine)
            }
            None => match away.direction {
                AwayDirection::Ball(t) => self.fw_step_with(state, &t, Some(face)),
                _ => self.fw_step_with_fresh_pair(state, Some(face)),
            },
        }
    }

    fn fw_step_with_fresh_pair(&mut self, state: &mut FwState, face: Option<FaceKind>) -> Result<()> {
        let g = state.gradient.clone();
        let t = self.top_pair(&g);
        self.fw_step_with(state, &t, face)
    }

    /// `1 / (f_new - C) >= 1 / (f - C) + margin`.
    fn accepts(&self, state: &FwState, candidate: f64, margin: f64) -> bool {
        let gap = state.bound_gap();
        let new_gap = candidate - state.lower_bound;
        if new_gap <= 0.0 {
            return true;
        }
        gap > 0.0 && 1.0 / new_gap >= 1.0 / gap + margin
    }

    /// Runs from [`initial_state`](Self::initial_state) until the bound gap
    /// criterion or the iteration budget is met.
    pub fn solve(&mut self) -> Result<(LowRankFactorization, SolverReport)> {
        let start = Instant::now();
        let mut state = self.initial_state()?;
        let target = self.config.gap_tol * state.objective.max(1.0);
        let mut trace = vec![record(&state, start)];
        let termination = loop {
            if state.bound_gap() <= target {
                // certify on exactly evaluated values
                self.refresh(&mut state)?;
                if state.bound_gap() <= target {
                    break Termination::GapTol;
                }
            }
            if state.iter >= self.config.max_iter {
                break Termination::MaxIter;
            }
            if self.config.in_face {
                self.in_face_step(&mut state)?;
            } else {
                self.fw_step(&mut state)?;
            }
            trace.push(record(&state, start));
        };
        self.refresh(&mut state)?;
        let report = SolverReport {
            per_iteration: trace,
            termination,
            total_seconds: start.elapsed().as_secs_f64(),
        };
        Ok((state.factor, report))
    }
}

fn record(state: &FwState, start: Instant) -> IterationRecord {
    IterationRecord {
        iter: state.iter,
        objective: state.objective,
        lower_bound: Some(state.lower_bound),
        bound_gap: Some(state.bound_gap()),
        residual: None,
        rank: state.factor.rank(),
        step: state.last_step,
        face: state.last_face,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn masked_norm_sq(m: &DenseMatrix, mask: &EntryMask) -> Result<f64> {
    Ok(m.as_slice().iter().zip(mask.as_slice()).filter(|(_, &keep)| keep).map(|(x, _)| x * x).sum())
}

/// Dense `U K V^T` for an `r x r` core `K`.
fn core_product(b: &LowRankFactorization, core: &DMatrix<f64>) -> DenseMatrix {
    let (rows, cols) = (b.rows(), b.cols());
    let r = b.rank();
    let mut out = DenseMatrix::zeros(rows, cols);
    let data = out.as_mut_slice();
    for bcol in 0..r {
        // column bcol of U K
        let mut uk = vec![0.0; rows];
        for a in 0..r {
            let k = core[(a, bcol)];
            if k != 0.0 {
                for (o, &u) in uk.iter_mut().zip(b.left(a)) {
                    *o += k * u;
                }
            }
        }
        let v = b.right(bcol);
        for (i, &x) in uk.iter().enumerate() {
            if x != 0.0 {
                for (o, &vj) in data[i * cols..(i + 1) * cols].iter_mut().zip(v) {
                    *o += x * vj;
                }
            }
        }
    }
    out
}

/// Solves `min 1/2 |P(B - V)|_F^2 s.t. |B|_* <= delta` from `B0 = -delta u0 v0^T`.
///
/// Reaching `max_iter` is not an error; the report says why the run ended.
pub fn solve_frmc(
    v: &DenseMatrix,
    config: &FwConfig,
    mask: Option<&EntryMask>,
) -> Result<(LowRankFactorization, SolverReport)> {
    FwSolver::new(v, mask, config.clone())?.solve()
}
