//! Video background modeling with low-rank matrices.
//!
//! The background of a video whose frames are the columns of `V` is found
//! as a low-rank `B` by one of three solvers:
//!
//! * [`fw::solve_frmc`]: `min 1/2 |B - V|_F^2 s.t. |B|_* <= delta` by
//!   Frank-Wolfe with in-face steps, keeping `B` as a thin SVD;
//! * [`ialm::solve_rpca`]: robust PCA by the inexact augmented Lagrangian
//!   method;
//! * [`ialm::solve_rmc`]: the nuclear-norm-only special case of the latter.
//!
//! [`video`] turns frame sequences into observation matrices and residuals
//! into foreground masks, and [`metrics`] scores masks against ground truth.

// Config checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fw;
pub mod ialm;
pub mod lowrank;
pub mod metrics;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod report;
pub mod video;

pub use error::{Error, Result};
pub use fw::{solve_frmc, FwConfig, StepRule};
pub use ialm::{solve_rmc, solve_rpca, IalmConfig, RpcaResult};
pub use lowrank::{DenseMatrix, EntryMask, LowRankFactorization, SingularTriplet};
pub use metrics::{evaluate, ConfusionCounts, FrameMetrics, MetricsReport};
pub use report::{FaceKind, IterationRecord, SolverReport, StepKind, Termination};
pub use video::{Cleanup, FrameFormat, FrameSequence, MaskSequence};
