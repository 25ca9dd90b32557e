//! Photon number analyzer: detection efficiency, dark counts and counter dead time.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamTag};
pub use crate::statkit::EfficiencyStage;
use crate::statkit::{budget_effective, EfficiencyBudget, PhotonDist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerParams {
    pub stages: Vec<EfficiencyStage>,
    /// Dark count rate, counts per second.
    pub dark_rate: f64,
    /// Counter dead time, seconds.
    pub dead_time: f64,
    /// Paralyzable dead time (every arrival restarts it) instead of the default
    /// non-paralyzable model.
    pub paralyzable: bool,
}

impl Default for AnalyzerParams {
    fn default() -> Self {
        AnalyzerParams {
            stages: default_stages(),
            dark_rate: 100.0,
            dead_time: 5.0e-8,
            paralyzable: false,
        }
    }
}

/// SPCM quantum efficiency followed by the coupling-lens/mirror, stray-light filter
/// and fiber-coupler transmittances.
pub fn default_stages() -> Vec<EfficiencyStage> {
    vec![
        EfficiencyStage::new("spcm", 0.70, 0.05),
        EfficiencyStage::new("lens_mirror", 0.902, 0.0),
        EfficiencyStage::new("stray_filter", 0.492, 0.0),
        EfficiencyStage::new("fiber_coupler", 0.882, 0.0),
    ]
}

impl AnalyzerParams {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("analyzer needs at least one efficiency stage".into()));
        }
        for s in &self.stages {
            if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
                return Err(Error::Config(format!(
                    "stage '{}' efficiency must lie in (0, 1], got {}",
                    s.name, s.efficiency
                )));
            }
            if !(s.sigma >= 0.0 && s.sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "stage '{}' uncertainty must be non-negative, got {}",
                    s.name, s.sigma
                )));
            }
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::Config(format!(
                "dark_rate must be non-negative, got {}",
                self.dark_rate
            )));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(Error::Config(format!(
                "dead_time must be non-negative, got {}",
                self.dead_time
            )));
        }
        Ok(())
    }

    /// Overall detection efficiency, the product of all stages.
    pub fn eta(&self) -> f64 {
        self.stages.iter().map(|s| s.efficiency).product()
    }

    pub fn budget(&self) -> EfficiencyBudget {
        budget_effective(&self.stages)
    }

    /// Expected dark counts in a counting interval of `duration` seconds.
    pub fn dark_mean(&self, duration: f64) -> f64 {
        self.dark_rate * duration
    }
}

/// Interval during which the counter accumulates events for one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingSpan {
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOrigin {
    Photon,
    Dark,
}

/// An event reaching the counter, before dead-time losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterEvent {
    pub t: f64,
    pub origin: EventOrigin,
}

/// Efficiency-thinned photons merged with dark events, sorted by time.
///
/// One uniform is drawn per photon and the dark events come after, so the result does
/// not depend on the dead-time settings.
pub fn counter_events(
    emitted: &[f64],
    params: &AnalyzerParams,
    span: CountingSpan,
    master_seed: u64,
    window_index: u64,
) -> Vec<CounterEvent> {
    let eta = params.eta();
    let mut rng = rng::stream(master_seed, window_index, StreamTag::Analyzer);
    let mut events: Vec<CounterEvent> = emitted
        .iter()
        .filter(|_| rng.random::<f64>() < eta)
        .map(|&t| CounterEvent {
            t,
            origin: EventOrigin::Photon,
        })
        .collect();
    let dark_mean = params.dark_mean(span.duration);
    if dark_mean > 0.0 {
        let n_dark = Poisson::new(dark_mean).expect("positive finite mean").sample(&mut rng) as usize;
        events.extend((0..n_dark).map(|_| CounterEvent {
            t: span.start + rng.random::<f64>() * span.duration,
            origin: EventOrigin::Dark,
        }));
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    events
}

/// Indices of the events that the counter registers.
///
/// Non-paralyzable: an event closer than `dead_time` to the last registered event is
/// lost. Paralyzable: an event closer than `dead_time` to the previous arrival of any
/// kind is lost.
pub fn registered_indices(times: &[f64], dead_time: f64, paralyzable: bool) -> Vec<usize> {
    let mut out = Vec::with_capacity(times.len());
    let mut reference: Option<f64> = None;
    for (i, &t) in times.iter().enumerate() {
        let blocked = reference.is_some_and(|r| t - r < dead_time);
        if !blocked {
            out.push(i);
            reference = Some(t);
        } else if paralyzable {
            reference = Some(t);
        }
    }
    out
}

/// Number of counts the analyzer registers for one window's emitted photons.
pub fn detect_window(
    emitted: &[f64],
    params: &AnalyzerParams,
    span: CountingSpan,
    master_seed: u64,
    window_index: u64,
) -> usize {
    let events = counter_events(emitted, params, span, master_seed, window_index);
    let times: Vec<f64> = events.iter().map(|e| e.t).collect();
    registered_indices(&times, params.dead_time, params.paralyzable).len()
}

/// Per-window count tally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub n_windows: u64,
    pub counts: BTreeMap<usize, u64>,
}

impl CountHistogram {
    pub fn from_counts(counts: BTreeMap<usize, u64>) -> Result<Self> {
        let n_windows: u64 = counts.values().sum();
        if n_windows == 0 {
            return Err(Error::InvalidArgument("histogram has no windows".into()));
        }
        Ok(CountHistogram { n_windows, counts })
    }

    pub fn max_count(&self) -> usize {
        self.counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&i, _)| i)
            .max()
            .unwrap_or(0)
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts.get(&i).copied().unwrap_or(0)
    }

    pub fn fraction(&self, i: usize) -> f64 {
        self.count(i) as f64 / self.n_windows as f64
    }

    /// Dense P′(i) for i = 0..=max_count.
    pub fn fractions(&self) -> PhotonDist {
        let probs = (0..=self.max_count()).map(|i| self.fraction(i)).collect();
        PhotonDist::unchecked(probs)
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(&i, &n)| i as f64 * n as f64).sum::<f64>() / self.n_windows as f64
    }
}

/// Exact tally of per-window counts.
pub fn build_histogram(counts: &[usize]) -> Result<CountHistogram> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a histogram from zero windows".into(),
        ));
    }
    let mut tally = BTreeMap::new();
    for &c in counts {
        *tally.entry(c).or_insert(0u64) += 1;
    }
    CountHistogram::from_counts(tally)
}
