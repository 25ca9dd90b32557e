//! Run configuration: one TOML file with a section per subsystem.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analyzer::AnalyzerParams;
use crate::error::{Error, Result};
use crate::source::SourceParams;
use crate::statkit::UNCERTAINTY_MIN_SAMPLES;

const REFERENCE_PRESET: &str = include_str!("../presets/reference.toml");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Name and version of the preset this config derives from, if any.
    pub preset: Option<String>,
    pub source: SourceParams,
    pub analyzer: AnalyzerParams,
    pub analysis: AnalysisConfig,
    pub run: RunSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Dark,
    Deadtime,
}

/// Which count corrections run before loss inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Correction>", into = "Vec<Correction>")]
pub struct Corrections {
    pub dark: bool,
    pub deadtime: bool,
}

impl Corrections {
    pub const NONE: Corrections = Corrections {
        dark: false,
        deadtime: false,
    };
    pub const ALL: Corrections = Corrections {
        dark: true,
        deadtime: true,
    };
}

impl From<Vec<Correction>> for Corrections {
    fn from(list: Vec<Correction>) -> Self {
        Corrections {
            dark: list.contains(&Correction::Dark),
            deadtime: list.contains(&Correction::Deadtime),
        }
    }
}

impl From<Corrections> for Vec<Correction> {
    fn from(c: Corrections) -> Self {
        let mut v = Vec::new();
        if c.deadtime {
            v.push(Correction::Deadtime);
        }
        if c.dark {
            v.push(Correction::Dark);
        }
        v
    }
}

impl FromStr for Corrections {
    type Err = Error;

    /// `none`, or a comma-separated subset of `dark` and `deadtime`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s.is_empty() {
            return Ok(Corrections::NONE);
        }
        let mut c = Corrections::NONE;
        for item in s.split(',') {
            match item.trim().to_ascii_lowercase().as_str() {
                "dark" => c.dark = true,
                "deadtime" | "dead-time" | "dead_time" => c.deadtime = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown correction '{other}' (expected dark, deadtime or none)"
                    )))
                }
            }
        }
        Ok(c)
    }
}

impl fmt::Display for Corrections {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.deadtime, self.dark) {
            (false, false) => f.write_str("none"),
            (true, false) => f.write_str("deadtime"),
            (false, true) => f.write_str("dark"),
            (true, true) => f.write_str("deadtime,dark"),
        }
    }
}

/// Order in which enabled corrections are undone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionOrder {
    #[default]
    DeadtimeFirst,
    DarkFirst,
}

impl CorrectionOrder {
    pub fn other(self) -> Self {
        match self {
            CorrectionOrder::DeadtimeFirst => CorrectionOrder::DarkFirst,
            CorrectionOrder::DarkFirst => CorrectionOrder::DeadtimeFirst,
        }
    }
}

impl FromStr for CorrectionOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deadtime-first" => Ok(CorrectionOrder::DeadtimeFirst),
            "dark-first" => Ok(CorrectionOrder::DarkFirst),
            other => Err(Error::Config(format!(
                "unknown correction order '{other}' (expected deadtime-first or dark-first)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Inversion truncation; defaults to the highest observed count.
    pub n_max: Option<usize>,
    pub corrections: Corrections,
    pub order: CorrectionOrder,
    /// Monte Carlo samples for uncertainty propagation; 0 disables it.
    pub n_uncertainty_samples: usize,
    /// Fixed dead-time merge probability. When absent it is calibrated by simulation.
    pub merge_prob: Option<f64>,
    /// Windows simulated to calibrate the merge probability.
    pub calibration_windows: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            n_max: None,
            corrections: Corrections::ALL,
            order: CorrectionOrder::DeadtimeFirst,
            n_uncertainty_samples: 10_000,
            merge_prob: None,
            calibration_windows: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n_windows: u64,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_windows: 100_000,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// The shipped preset reproducing the reference experiment.
    pub fn reference_preset() -> Self {
        Self::from_toml_str(REFERENCE_PRESET).expect("bundled preset parses")
    }

    pub fn reference_preset_text() -> &'static str {
        REFERENCE_PRESET
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.analyzer.validate()?;
        if self.run.n_windows == 0 {
            return Err(Error::Config("run.n_windows must be at least 1".into()));
        }
        let a = &self.analysis;
        if a.n_uncertainty_samples != 0 && a.n_uncertainty_samples < UNCERTAINTY_MIN_SAMPLES {
            return Err(Error::Config(format!(
                "analysis.n_uncertainty_samples must be 0 or at least {}",
                UNCERTAINTY_MIN_SAMPLES
            )));
        }
        if let Some(m) = a.merge_prob {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Config(format!(
                    "analysis.merge_prob must lie in [0, 1], got {m}"
                )));
            }
        }
        if a.corrections.deadtime && a.merge_prob.is_none() && a.calibration_windows == 0 {
            return Err(Error::Config(
                "dead-time correction needs analysis.merge_prob or calibration_windows > 0".into(),
            ));
        }
        Ok(())
    }

    /// Expected dark counts per window.
    pub fn dark_mean(&self) -> f64 {
        self.analyzer.dark_mean(self.source.window_duration)
    }
}
