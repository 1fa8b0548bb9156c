//! Dense-matrix primitives and factored low-rank representations.

mod dense;
mod factor;
mod power;
mod prox;

pub use dense::{DenseMatrix, EntryMask, GramSide, LinearOperator};
pub use factor::{
    LowRankFactorization, RankOneUpdate, DEFAULT_MATERIALIZE_BUDGET, ORTHONORMALITY_TOL, REORTHONORMALIZE_TOL,
};
pub use power::{dense_top_pair, partial_svd, top_singular_pair, PowerIteration, SingularTriplet, DEFAULT_SEED};
pub use prox::{shrink, soft_threshold, svt};

pub(crate) use factor::symmetric_eigen;
