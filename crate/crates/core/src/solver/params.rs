use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{DEFAULT_POSITIVITY_TOL, DEFAULT_TOL_COL};
use crate::simplex::DEFAULT_ZERO_TOL;

/// Numerical knobs of the balanced-point search and assignment extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Neighborhood radius in lattice-metric units; `None` means `2 / grid_depth`.
    pub tau: Option<f64>,
    pub epsilon: f64,
    pub grid_depth: u32,
    pub refine_levels: u32,
    pub residual_tol: f64,
    pub positivity_tol: f64,
    pub tol_col: f64,
    /// Overrides every guest's tie tolerance when set.
    pub tie_tol: Option<f64>,
    pub zero_tol: f64,
    /// Run the (grid) cover-hypothesis checks before solving.
    pub check_hypotheses: bool,
    /// How often to halve `tau` when the certificate fails at the balanced point.
    pub tau_retries: u32,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tau: None,
            epsilon: 1e-4,
            grid_depth: 64,
            refine_levels: 2,
            residual_tol: 1e-6,
            positivity_tol: DEFAULT_POSITIVITY_TOL,
            tol_col: DEFAULT_TOL_COL,
            tie_tol: None,
            zero_tol: DEFAULT_ZERO_TOL,
            check_hypotheses: true,
            tau_retries: 2,
        }
    }
}

impl SolverParams {
    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(2.0 / self.grid_depth as f64)
    }

    /// Depth of the finest refinement level.
    pub fn final_depth(&self) -> u32 {
        self.grid_depth << self.refine_levels
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tau", self.tau())?;
        positive("epsilon", self.epsilon)?;
        positive("residual_tol", self.residual_tol)?;
        positive("positivity_tol", self.positivity_tol)?;
        positive("tol_col", self.tol_col)?;
        positive("zero_tol", self.zero_tol)?;
        if let Some(t) = self.tie_tol {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidArgument(format!("tie_tol must be >= 0, got {t}")));
            }
        }
        if self.grid_depth == 0 {
            return Err(Error::InvalidArgument("grid_depth must be positive".into()));
        }
        if self.refine_levels > 8 || self.grid_depth.checked_shl(self.refine_levels).is_none() {
            return Err(Error::InvalidArgument("too many refinement levels".into()));
        }
        Ok(())
    }
}
