use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub mean_control: f64,
    pub vacuum_gate_prob: f64,
}

/// Probability e^{−m} that a window sees no control detection, for each mean `m`.
pub fn rate_sweep(mean_control: &[f64]) -> Result<Vec<RateRow>> {
    mean_control
        .iter()
        .map(|&m| {
            if m >= 0.0 {
                Ok(RateRow {
                    mean_control: m,
                    vacuum_gate_prob: (-m).exp(),
                })
            } else {
                Err(Error::InvalidArgument(format!(
                    "mean control count must be non-negative, got {m}"
                )))
            }
        })
        .collect()
}
