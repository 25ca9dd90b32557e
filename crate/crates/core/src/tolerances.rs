//! Numerical tolerances used across the analysis code, gathered in one record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Negative probabilities above `-negative_mass` are rounding and get clipped to 0;
    /// anything below is reported as a model mismatch.
    pub negative_mass: f64,
    /// Allowed deviation of a distribution's total mass from 1.
    pub normalization: f64,
    /// Absolute tolerance on the Poisson mean when solving for a target P(2).
    pub bisection: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        negative_mass: 1e-9,
        normalization: 1e-9,
        bisection: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
