use serde::{Deserialize, Serialize};

use crate::analyzer::CountHistogram;
use crate::config::RunConfig;
use crate::pipeline::{AnalysisOutcome, AnalysisSettings, MergeCalibration, SimulationOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumGate {
    /// e^{−m} for the configured mean control count.
    pub analytic: f64,
    pub simulated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

impl Provenance {
    pub fn new(seed: u64, wall_time_s: f64) -> Self {
        Provenance {
            seed,
            version: format!("gspdc {}", env!("CARGO_PKG_VERSION")),
            wall_time_s,
        }
    }
}

/// Full record of one analysis: inputs, intermediate corrections, estimate and
/// comparisons. Every numerical field can be regenerated from `config`, `settings`
/// and the measured input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: Option<RunConfig>,
    pub settings: AnalysisSettings,
    pub histogram: Option<CountHistogram>,
    pub merge_calibration: Option<MergeCalibration>,
    pub simulation: Option<SimulationOutcome>,
    pub analysis: AnalysisOutcome,
    pub vacuum_gate: Option<VacuumGate>,
    pub provenance: Provenance,
}

impl Report {
    /// The report as JSON with the wall-clock time zeroed, for reproducibility checks.
    pub fn numerical_json(&self) -> String {
        let mut r = self.clone();
        r.provenance.wall_time_s = 0.0;
        crate::io::to_json_pretty(&r)
    }

    /// Human-readable summary for the terminal.
    pub fn summary(&self) -> String {
        let a = &self.analysis;
        let mut out = String::new();
        let fmt_dist = |d: &crate::PhotonDist| {
            d.probs()
                .iter()
                .enumerate()
                .map(|(j, p)| match d.sigma() {
                    Some(s) => format!("P({j}) = {p:.5} ± {:.5}", s[j]),
                    None => format!("P({j}) = {p:.5}"),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        out.push_str(&format!("measured:  {}\n", fmt_dist(&a.measured).replace("P(", "P'(")));
        out.push_str(&format!("corrected: {}\n", fmt_dist(&a.corrected).replace("P(", "P'(")));
        out.push_str(&format!(
            "eta = {:.4} ± {:.4}, corrections = {}, merge_prob = {:.4}, dark_mean = {:.4}\n",
            self.settings.budget.effective,
            self.settings.budget.effective_sigma,
            self.settings.corrections,
            self.settings.merge_prob,
            self.settings.dark_mean
        ));
        out.push_str(&format!("estimate:  {}\n", fmt_dist(&a.estimate)));
        let d = &a.diagnostics;
        let opt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        out.push_str(&format!(
            "<n> = {:.4}, Fano = {}, g2(0) = {}\n",
            d.mean,
            opt(d.fano),
            opt(d.g2_zero)
        ));
        if let Some(s) = a.order_sensitivity {
            out.push_str(&format!("correction order sensitivity: {s:.3e}\n"));
        }
        if a.rejected_samples > 0 {
            out.push_str(&format!("rejected uncertainty samples: {}\n", a.rejected_samples));
        }
        if let Some(v) = &self.vacuum_gate {
            out.push_str(&format!("vacuum-gate probability: analytic {:.4e}", v.analytic));
            if let Some(s) = v.simulated {
                out.push_str(&format!(", simulated {s:.4e}"));
            }
            out.push('\n');
        }
        if let Some(w) = &a.wcl {
            out.push_str(&w.table());
        }
        out
    }
}
