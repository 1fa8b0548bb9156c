//! Inexact augmented Lagrangian baselines: robust PCA
//! (`min |B|_* + lambda |F|_1 s.t. V = B + F`) and the nuclear-norm-only
//! special case `min |B|_* s.t. V = B`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::{dense_top_pair, soft_threshold, svt, DenseMatrix, LowRankFactorization, PowerIteration};
use crate::report::{IterationRecord, SolverReport, StepKind, Termination};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IalmConfig {
    /// Weight of the l1 term; `None` uses `1 / sqrt(max(n1, n2))`.
    pub lambda: Option<f64>,
    /// Initial penalty; `None` uses `1.25 / sigma_1(V)`.
    pub rho0: Option<f64>,
    pub rho_scale: f64,
    /// Penalty cap; `None` uses `1e7 * rho0`.
    pub rho_max: Option<f64>,
    pub primal_tol: f64,
    pub max_iter: usize,
}

impl Default for IalmConfig {
    fn default() -> Self {
        IalmConfig {
            lambda: None,
            rho0: None,
            rho_scale: 1.6,
            rho_max: None,
            primal_tol: 1e-7,
            max_iter: 500,
        }
    }
}

impl IalmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: Option<f64>| x.is_none_or(|v| v.is_finite() && v > 0.0);
        if !positive(self.lambda) {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        if !positive(self.rho0) || !positive(self.rho_max) {
            return Err(Error::InvalidConfig("rho0 and rho_max must be positive".into()));
        }
        if !(self.rho_scale > 1.0) {
            return Err(Error::InvalidConfig("rho_scale must exceed 1".into()));
        }
        if !(self.primal_tol > 0.0) {
            return Err(Error::InvalidConfig("primal_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Low-rank part, sparse part and trace of an IALM run.
#[derive(Clone, Debug)]
pub struct RpcaResult {
    pub background: LowRankFactorization,
    pub sparse: DenseMatrix,
    pub report: SolverReport,
}

/// Hooks into the proximal steps of an IALM run.
pub trait IalmObserver {
    fn on_svt(&mut self, _input: &DenseMatrix, _tau: f64, _output: &LowRankFactorization) {}
    fn on_soft_threshold(&mut self, _input: &DenseMatrix, _tau: f64, _output: &DenseMatrix) {}
}

/// Observer that ignores every event.
pub struct NoObserver;

impl IalmObserver for NoObserver {}

struct Setup {
    sigma1: f64,
    norm_v: f64,
    rho: f64,
    rho_max: f64,
}

fn setup(v: &DenseMatrix, config: &IalmConfig) -> Result<Setup> {
    config.validate()?;
    v.check_finite()?;
    let sigma1 = dense_top_pair(&PowerIteration::new(1e-10, 1000), v).sigma;
    let rho = config.rho0.unwrap_or(if sigma1 > 0.0 { 1.25 / sigma1 } else { 1.0 });
    Ok(Setup {
        sigma1,
        norm_v: v.frobenius_norm(),
        rho,
        rho_max: config.rho_max.unwrap_or(1e7 * rho),
    })
}

fn zero_result(v: &DenseMatrix, start: Instant) -> RpcaResult {
    let record = IterationRecord {
        iter: 0,
        objective: 0.0,
        lower_bound: None,
        bound_gap: None,
        residual: Some(0.0),
        rank: 0,
        step: StepKind::Init,
        face: None,
        elapsed: start.elapsed().as_secs_f64(),
    };
    RpcaResult {
        background: LowRankFactorization::zero(v.rows(), v.cols()),
        sparse: DenseMatrix::zeros(v.rows(), v.cols()),
        report: SolverReport {
            per_iteration: vec![record],
            termination: Termination::PrimalTol,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    }
}

pub fn solve_rpca(v: &DenseMatrix, config: &IalmConfig) -> Result<RpcaResult> {
    solve_rpca_observed(v, config, &mut NoObserver)
}

/// Robust PCA by IALM. Each iteration performs
///
/// ```text
/// B <- svt(V - F + Y/rho, 1/rho)
/// F <- soft(V - B + Y/rho, lambda/rho)
/// Y <- Y + rho (V - B - F)
/// rho <- min(rho * rho_scale, rho_max)
/// ```
///
/// from `Y0 = V / max(sigma_1(V), |V|_max / lambda)`, and stops once
/// `|V - B - F|_F / |V|_F <= primal_tol`.
pub fn solve_rpca_observed(v: &DenseMatrix, config: &IalmConfig, observer: &mut dyn IalmObserver) -> Result<RpcaResult> {
    let start = Instant::now();
    let Setup {
        sigma1,
        norm_v,
        mut rho,
        rho_max,
    } = setup(v, config)?;
    if norm_v == 0.0 {
        return Ok(zero_result(v, start));
    }
    let (rows, cols) = v.shape();
    let lambda = config.lambda.unwrap_or(1.0 / (rows.max(cols) as f64).sqrt());

    let mut y = v.scale(1.0 / sigma1.max(v.max_abs() / lambda));
    let mut sparse = DenseMatrix::zeros(rows, cols);
    let mut background = LowRankFactorization::zero(rows, cols);
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIter;

    for iter in 1..=config.max_iter {
        // V - F + Y / rho
        let mut input = v.sub(&sparse);
        input.axpy(1.0 / rho, &y);
        background = svt(&input, 1.0 / rho);
        observer.on_svt(&input, 1.0 / rho, &background);
        let dense_b = background.materialize()?;

        let mut input = v.sub(&dense_b);
        input.axpy(1.0 / rho, &y);
        sparse = soft_threshold(&input, lambda / rho);
        observer.on_soft_threshold(&input, lambda / rho, &sparse);

        let mut residual = v.sub(&dense_b);
        residual.axpy(-1.0, &sparse);
        y.axpy(rho, &residual);
        rho = (rho * config.rho_scale).min(rho_max);

        let relative = residual.frobenius_norm() / norm_v;
        let l1: f64 = sparse.as_slice().iter().map(|x| x.abs()).sum();
        trace.push(IterationRecord {
            iter,
            objective: background.nuclear_norm() + lambda * l1,
            lower_bound: None,
            bound_gap: None,
            residual: Some(relative),
            rank: background.rank(),
            step: StepKind::Ialm,
            face: None,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if relative <= config.primal_tol {
            termination = Termination::PrimalTol;
            break;
        }
    }

    Ok(RpcaResult {
        background,
        sparse,
        report: SolverReport {
            per_iteration: trace,
            termination,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

pub fn solve_rmc(v: &DenseMatrix, config: &IalmConfig) -> Result<RpcaResult> {
    solve_rmc_observed(v, config, &mut NoObserver)
}

/// Nuclear-norm-only IALM:
///
/// ```text
/// B <- svt(V + Y/rho, 1/rho)
/// Y <- Y + rho (V - B)
/// ```
///
/// from `Y0 = V / sigma_1(V)`. The constraint `V = B` only holds in the
/// limit, so the run stops on `|B_k - B_{k-1}|_F / |B_k|_F <= primal_tol`.
/// The sparse part is reported as `V - B`.
pub fn solve_rmc_observed(v: &DenseMatrix, config: &IalmConfig, observer: &mut dyn IalmObserver) -> Result<RpcaResult> {
    let start = Instant::now();
    let Setup {
        sigma1,
        norm_v,
        mut rho,
        rho_max,
    } = setup(v, config)?;
    if norm_v == 0.0 {
        return Ok(zero_result(v, start));
    }
    let (rows, cols) = v.shape();
    let mut y = v.scale(1.0 / sigma1);
    let mut background = LowRankFactorization::zero(rows, cols);
    let mut dense_b = DenseMatrix::zeros(rows, cols);
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIter;

    for iter in 1..=config.max_iter {
        let mut input = v.clone();
        input.axpy(1.0 / rho, &y);
        background = svt(&input, 1.0 / rho);
        observer.on_svt(&input, 1.0 / rho, &background);
        let next_b = background.materialize()?;

        let residual = v.sub(&next_b);
        y.axpy(rho, &residual);
        rho = (rho * config.rho_scale).min(rho_max);

        let change = next_b.sub(&dense_b).frobenius_norm();
        let scale = next_b.frobenius_norm();
        let relative = if scale > 0.0 { change / scale } else { f64::INFINITY };
        dense_b = next_b;
        trace.push(IterationRecord {
            iter,
            objective: background.nuclear_norm(),
            lower_bound: None,
            bound_gap: None,
            residual: Some(relative),
            rank: background.rank(),
            step: StepKind::Ialm,
            face: None,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if relative <= config.primal_tol {
            termination = Termination::IterateChange;
            break;
        }
    }

    Ok(RpcaResult {
        sparse: v.sub(&dense_b),
        background,
        report: SolverReport {
            per_iteration: trace,
            termination,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    })
}
