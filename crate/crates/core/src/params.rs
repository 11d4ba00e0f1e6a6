//! Dimensionless model constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the unilateral constraint `u >= -1` enters the time stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleMode {
    /// Each step solves the linear stage as a bound-constrained problem;
    /// the multiplier of the bound is the obstacle reaction.
    #[default]
    Projection,
    /// Heaviside penalty `+penalty_s * Heav(-1 - u)` on the right-hand side.
    Penalty,
}

/// Backend for the sparse symmetric systems of the potential solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LinearBackend {
    /// Conjugate gradients with a diagonal preconditioner.
    #[default]
    Pcg,
    /// Banded Cholesky factorization of the column-ordered system.
    BandedCholesky,
}

/// All constants of the rescaled model.
///
/// `gamma2` is the inertia coefficient, `beta` the bending stiffness,
/// `tau` the tension, `lambda` the voltage parameter, `delta` the relative
/// plate thickness and `eps` the aspect ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub gamma2: f64,
    pub beta: f64,
    pub tau: f64,
    pub lambda: f64,
    pub delta: f64,
    pub eps: f64,
    pub penalty_s: f64,
    pub obstacle_mode: ObstacleMode,
    pub tol_linear: f64,
    pub tol_newton: f64,
    /// Minimum distance of `u` above -1 accepted by the potential solvers.
    pub gap_tol: f64,
    pub u_max: f64,
    /// Points of the composite Simpson rule used for `N_delta`.
    pub quad_points: usize,
    pub linear_backend: LinearBackend,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma2: 0.0,
            beta: 0.0,
            tau: 1.0,
            lambda: 0.0,
            delta: 0.1,
            eps: 0.1,
            penalty_s: 1.0e4,
            obstacle_mode: ObstacleMode::Projection,
            tol_linear: 1.0e-10,
            tol_newton: 1.0e-9,
            gap_tol: 1.0e-6,
            u_max: 4.0,
            quad_points: 33,
            linear_backend: LinearBackend::Pcg,
            seed: 0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma2", self.gamma2),
            ("beta", self.beta),
            ("tau", self.tau),
            ("lambda", self.lambda),
            ("delta", self.delta),
            ("eps", self.eps),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::arg(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let pos = [
            ("penalty_s", self.penalty_s),
            ("tol_linear", self.tol_linear),
            ("tol_newton", self.tol_newton),
            ("gap_tol", self.gap_tol),
            ("u_max", self.u_max),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::arg(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.delta > 0.0 && self.quad_points < 2 {
            return Err(Error::arg("quad_points must be >= 2 when delta > 0"));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..self.clone() }
    }
}
