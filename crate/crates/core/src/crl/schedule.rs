//! Power-law step sizes for the actor mix (`μ`), the recursive averages
//! (`η`) and the critic/encoder/potential SGD (`υ`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub mu0: f64,
    pub eta0: f64,
    pub upsilon0: f64,
    pub mu_exp: f64,
    pub eta_exp: f64,
    pub upsilon_exp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub mu: f64,
    pub eta: f64,
    pub upsilon: f64,
}

impl Default for StepSchedule {
    /// Exponents chosen so that `μ_i/η_i → 0` and all squared sums converge.
    fn default() -> Self {
        Self {
            mu0: 0.2,
            eta0: 1.0,
            upsilon0: 3e-3,
            mu_exp: 0.7,
            eta_exp: 0.6,
            upsilon_exp: 0.55,
        }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("mu_exp", self.mu_exp), ("eta_exp", self.eta_exp), ("upsilon_exp", self.upsilon_exp)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {e}")));
            }
        }
        if !(self.mu0 > 0.0 && self.mu0 <= 1.0) {
            return Err(Error::Config(format!("mu0 must lie in (0, 1], got {}", self.mu0)));
        }
        if !(self.eta0 > 0.0 && self.eta0 <= 1.0) {
            return Err(Error::Config(format!("eta0 must lie in (0, 1], got {}", self.eta0)));
        }
        if !(self.upsilon0 > 0.0 && self.upsilon0.is_finite()) {
            return Err(Error::Config(format!("upsilon0 must be positive, got {}", self.upsilon0)));
        }
        Ok(())
    }

    /// Step sizes for iteration `i ≥ 1`.
    pub fn step_sizes(&self, i: u64) -> StepSizes {
        let x = i.max(1) as f64;
        StepSizes {
            mu: self.mu0 * x.powf(-self.mu_exp),
            eta: self.eta0 * x.powf(-self.eta_exp),
            upsilon: self.upsilon0 * x.powf(-self.upsilon_exp),
        }
    }
}
