use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default radius is this multiple of the leading singular value of `V`.
pub const DEFAULT_DELTA_SCALE: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Closed-form minimizer of the quadratic along the direction.
    ExactLineSearch,
    /// `2 / (i + 1)` at step `i >= 1`.
    Harmonic,
}

/// Settings for [`solve_frmc`](super::solve_frmc).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    /// Nuclear-norm ball radius; `None` picks `1.05 * sigma_1(V)`.
    pub delta: Option<f64>,
    /// Threshold for accepting the boundary in-face candidate.
    pub gamma1: f64,
    /// Threshold for accepting the line-searched in-face candidate.
    pub gamma2: f64,
    /// Lipschitz bound of the gradient; exactly 1 for the squared loss.
    pub lipschitz: f64,
    /// Diameter bound; `None` uses `2 * delta`.
    pub diameter: Option<f64>,
    pub max_iter: usize,
    /// Stop when `f(B) - C <= gap_tol * max(1, f(B0))`.
    pub gap_tol: f64,
    pub step_rule: StepRule,
    /// Singular values below `rank_tol * s_1` count as zero.
    pub rank_tol: f64,
    /// Iterates with `|B|_* >= delta * (1 - boundary_tol)` lie on the sphere.
    pub boundary_tol: f64,
    /// Relative residual target for the linear minimization oracle.
    pub power_tol: f64,
    /// Power steps before the oracle switches to an exact eigensolve of the
    /// small Gram matrix.
    pub power_max_iter: usize,
    /// `false` runs the classic Frank-Wolfe method without in-face steps.
    pub in_face: bool,
    pub seed: u64,
}

impl Default for FwConfig {
    fn default() -> Self {
        FwConfig {
            delta: None,
            gamma1: 0.0,
            gamma2: 0.01,
            lipschitz: 1.0,
            diameter: None,
            max_iter: 1000,
            gap_tol: 1e-4,
            step_rule: StepRule::ExactLineSearch,
            rank_tol: 1e-9,
            boundary_tol: 1e-5,
            power_tol: 1e-10,
            power_max_iter: 30,
            in_face: true,
            seed: crate::lowrank::DEFAULT_SEED,
        }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return fail("delta must be positive and finite");
            }
        }
        if !(0.0 <= self.gamma1 && self.gamma1 <= self.gamma2 && self.gamma2 <= 1.0) {
            return fail("gammas must satisfy 0 <= gamma1 <= gamma2 <= 1");
        }
        if !(self.lipschitz >= 1.0) {
            return fail("lipschitz bound must be at least 1");
        }
        if let Some(d) = self.diameter {
            if !(d.is_finite() && d > 0.0) {
                return fail("diameter must be positive and finite");
            }
        }
        if !(self.gap_tol > 0.0) {
            return fail("gap_tol must be positive");
        }
        if !(0.0..1.0).contains(&self.rank_tol) {
            return fail("rank_tol must lie in [0, 1)");
        }
        if !(self.boundary_tol > 0.0 && self.boundary_tol < 1.0) {
            return fail("boundary_tol must lie in (0, 1)");
        }
        if !(self.power_tol > 0.0) || self.power_max_iter == 0 {
            return fail("power iteration needs a positive tolerance and budget");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        FwConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_misordered_gammas() {
        let c = FwConfig {
            gamma1: 0.5,
            gamma2: 0.1,
            ..FwConfig::default()
        };
        assert!(c.validate().is_err());
        let c = FwConfig {
            delta: Some(-1.0),
            ..FwConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
