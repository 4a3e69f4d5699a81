//! Shared numerical building blocks: Gaussian tail functions, bracketed
//! root finding, Nelder–Mead minimization, central differences and the
//! reproducible random number generator used by the simulator.

mod diff;
mod nelder_mead;
mod rng;
mod roots;
mod special;

pub use diff::finite_difference;
pub use nelder_mead::{nelder_mead_minimize, Minimum};
pub use rng::{rng_from_seed, RandomSeed, SimRng};
pub use roots::{bisect_root, bisect_root_report, RootReport};
pub use special::{normal_pdf, q_function, q_inverse};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rules shared by the iterative routines.
///
/// `abs_tol` doubles as the bracket width ε at which the bisection
/// allocator stops narrowing the constraint line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl ToleranceConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        let tol = Self {
            abs_tol,
            rel_tol,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Precondition(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Precondition(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Precondition("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Width below which an interval around `x` counts as converged.
    pub fn width_for(&self, x: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * x.abs())
    }

    /// Tolerance for inner 1-D solves that must hit a level set to
    /// near machine precision.
    pub(crate) fn tight() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-15,
            max_iter: 2000,
        }
    }
}
