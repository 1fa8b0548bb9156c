//! Shared fixtures for the criterion benches.

use bgsub_cli::{generate, SyntheticSpec};
use bgsub_core::lowrank::partial_svd;
use bgsub_core::video::to_observation_matrix;
use bgsub_core::{DenseMatrix, MaskSequence};

/// Observation matrix of a synthetic scene plus what the solvers need.
pub struct Fixture {
    pub spec: SyntheticSpec,
    pub v: DenseMatrix,
    pub truth: MaskSequence,
    /// Nuclear norm of the noise-free background.
    pub delta: f64,
}

impl Fixture {
    pub fn new(spec: SyntheticSpec, seed: u64) -> Self {
        let scene = generate(&spec, seed).expect("valid synthetic spec");
        let delta = partial_svd(&scene.background, 0.0).singular_values().iter().sum();
        Fixture {
            v: to_observation_matrix(&scene.frames),
            truth: scene.truth,
            delta,
            spec,
        }
    }

    /// 32x32x60.
    pub fn accuracy() -> Self {
        Self::new(SyntheticSpec::accuracy_default(), 7)
    }

    /// 64x64x200.
    pub fn timing() -> Self {
        Self::new(SyntheticSpec::timing_default(), 7)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let f = Fixture::accuracy();
        assert_eq!(f.v.shape(), (32 * 32, 60));
        assert_eq!(f.truth.len(), 60);
        assert!(f.delta > 0.0);
    }
}
