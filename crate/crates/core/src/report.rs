//! Per-iteration solver traces shared by every solver.

use serde::{Deserialize, Serialize};

/// Which update produced an iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// Starting point, before any update.
    Init,
    /// In-face step to the relative boundary of the current minimal face.
    InFaceBoundary,
    /// In-face step with a line-searched length.
    InFaceInterior,
    /// Classic Frank-Wolfe step towards the linear minimizer.
    RegularFw,
    /// One inexact augmented Lagrangian iteration.
    Ialm,
}

/// Minimal face of the nuclear-norm ball containing an iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceKind {
    /// Interior point: the face is the whole ball.
    FullBall,
    /// Boundary point of rank > 1: `{U M V^T : M psd, tr M = delta}`.
    Spectrahedron,
    /// Boundary point of rank 1, an extreme point.
    Singleton,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GapTol,
    PrimalTol,
    IterateChange,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_gap: Option<f64>,
    /// Relative primal residual (IALM) or relative iterate change (RMC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub rank: usize,
    pub step: StepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<FaceKind>,
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub per_iteration: Vec<IterationRecord>,
    pub termination: Termination,
    pub total_seconds: f64,
}

impl SolverReport {
    /// Number of updates performed (the initial record is not counted).
    pub fn iterations(&self) -> usize {
        self.per_iteration.iter().filter(|r| r.step != StepKind::Init).count()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.per_iteration.last()
    }

    /// Number of iterations whose rank exceeds the previous one by more
    /// than one.
    pub fn rank_growth_violations(&self) -> usize {
        self.per_iteration.windows(2).filter(|w| w[1].rank > w[0].rank + 1).count()
    }
}
