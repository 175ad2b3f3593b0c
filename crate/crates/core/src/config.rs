//! Solver knobs shared by the outer iteration and the inner projection.

use crate::error::{Error, Result};

/// Tolerances and iteration limits for [`crate::solver::run`] and
/// [`crate::mixture::e_project`].
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Curvature parameter of the fixed-point map; must be positive.
    pub gamma: f64,
    /// Relative objective-change threshold for declaring convergence.
    /// The change must stay below it for three consecutive iterations.
    pub tol_obj: f64,
    /// Hard cap on outer iterations.
    pub max_iters: usize,
    /// Sup-norm gradient threshold for the inner projection.
    pub tol_proj: f64,
    /// Hard cap on projection descent steps.
    pub max_proj_iters: usize,
    /// Eigenvalue floor applied before operator logarithms.
    pub eps_clamp: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1.0,
            tol_obj: 1e-10,
            max_iters: 5000,
            tol_proj: 1e-10,
            max_proj_iters: 10_000,
            eps_clamp: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::BadParameter {
                name: "gamma",
                value: self.gamma,
                range: "(0, inf)",
            });
        }
        if !(self.tol_obj > 0.0 && self.tol_obj.is_finite()) {
            return Err(Error::BadParameter {
                name: "tol_obj",
                value: self.tol_obj,
                range: "(0, inf)",
            });
        }
        if !(self.tol_proj > 0.0 && self.tol_proj.is_finite()) {
            return Err(Error::BadParameter {
                name: "tol_proj",
                value: self.tol_proj,
                range: "(0, inf)",
            });
        }
        if self.max_iters == 0 {
            return Err(Error::BadParameter {
                name: "max_iters",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if self.max_proj_iters == 0 {
            return Err(Error::BadParameter {
                name: "max_proj_iters",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if !(self.eps_clamp > 0.0 && self.eps_clamp <= 1e-6) {
            return Err(Error::BadParameter {
                name: "eps_clamp",
                value: self.eps_clamp,
                range: "(0, 1e-6]",
            });
        }
        Ok(())
    }
}
