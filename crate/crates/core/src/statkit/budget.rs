use serde::{Deserialize, Serialize};

/// One factor of a detection efficiency budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyStage {
    pub name: String,
    pub efficiency: f64,
    /// Absolute 1σ uncertainty of `efficiency`.
    #[serde(default)]
    pub sigma: f64,
}

impl EfficiencyStage {
    pub fn new(name: &str, efficiency: f64, sigma: f64) -> Self {
        EfficiencyStage {
            name: name.to_string(),
            efficiency,
            sigma,
        }
    }
}

/// Itemized efficiency budget with its product and propagated uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub stages: Vec<EfficiencyStage>,
    pub effective: f64,
    pub effective_sigma: f64,
}

/// Product of the stage efficiencies; relative uncertainties add in quadrature.
pub fn budget_effective(stages: &[EfficiencyStage]) -> EfficiencyBudget {
    let effective: f64 = stages.iter().map(|s| s.efficiency).product();
    let rel_var: f64 = stages
        .iter()
        .filter(|s| s.sigma > 0.0)
        .map(|s| (s.sigma / s.efficiency).powi(2))
        .sum();
    EfficiencyBudget {
        stages: stages.to_vec(),
        effective,
        effective_sigma: effective * rel_var.sqrt(),
    }
}

impl EfficiencyBudget {
    /// A budget of a single lumped efficiency.
    pub fn lumped(effective: f64, sigma: f64) -> Self {
        budget_effective(&[EfficiencyStage::new("lumped", effective, sigma)])
    }
}
