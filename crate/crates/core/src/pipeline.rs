//! End-to-end runs: simulate source and analyzer together, calibrate the dead-time
//! merge probability, and turn measured count fractions into a photon-number estimate.

use serde::{Deserialize, Serialize};

use crate::analyzer::{
    build_histogram, counter_events, registered_indices, AnalyzerParams, CountHistogram, CountingSpan, EventOrigin,
};
use crate::config::{CorrectionOrder, Corrections, RunConfig};
use crate::error::{Error, Result};
use crate::source::{Simulator, SourceParams};
use crate::statkit::{
    dark_correct, deadtime_correct, invert_loss, match_wcl_by_mean, match_wcl_by_p2, poisson_dist, poisson_pmf,
    propagate_eta_uncertainty, Diagnostics, EfficiencyBudget, PhotonDist, UncertaintyOptions,
};

/// Seeds for calibration runs are offset so they never reuse measurement windows.
const CALIBRATION_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// The counter integrates over the window shifted by the signal delay.
pub fn counting_span(source: &SourceParams) -> CountingSpan {
    CountingSpan {
        start: source.delay_latency,
        duration: source.window_duration,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct WindowSummary {
    control: usize,
    emitted: usize,
    registered: usize,
}

/// Aggregate result of simulating source plus analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub n_windows: u64,
    /// Registered counts per window, the simulated P′(i).
    pub registered: CountHistogram,
    /// Photons leaving the source per window, the ground truth P(j).
    pub emitted: CountHistogram,
    /// Control detections per window.
    pub control: CountHistogram,
    pub mean_control: f64,
    /// Fraction of windows in which the shutter never opened.
    pub vacuum_gate_fraction: f64,
}

pub fn simulate(source: &SourceParams, analyzer: &AnalyzerParams, n_windows: u64) -> Result<SimulationOutcome> {
    if n_windows == 0 {
        return Err(Error::Config("n_windows must be at least 1".into()));
    }
    analyzer.validate()?;
    let sim = Simulator::new(source.clone())?;
    let span = counting_span(source);
    let seed = source.master_seed;
    let summaries = sim.map_windows(n_windows, |rec| {
        let events = counter_events(&rec.emitted, analyzer, span, seed, rec.window_index);
        let times: Vec<f64> = events.iter().map(|e| e.t).collect();
        WindowSummary {
            control: rec.control_detections.len(),
            emitted: rec.emitted.len(),
            registered: registered_indices(&times, analyzer.dead_time, analyzer.paralyzable).len(),
        }
    });
    let column = |f: fn(&WindowSummary) -> usize| summaries.iter().map(f).collect::<Vec<_>>();
    let control = build_histogram(&column(|s| s.control))?;
    Ok(SimulationOutcome {
        n_windows,
        registered: build_histogram(&column(|s| s.registered))?,
        emitted: build_histogram(&column(|s| s.emitted))?,
        mean_control: control.mean(),
        vacuum_gate_fraction: control.fraction(0),
        control,
    })
}

/// Which two-event windows count towards the merge probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeScope {
    /// Every window with exactly two events at the counter.
    #[default]
    AllPairs,
    /// Only windows whose two events are both photons that passed the open shutter.
    GatedPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeCalibration {
    pub scope: MergeScope,
    pub merge_prob: f64,
    pub two_event_windows: u64,
    pub merged_windows: u64,
    pub calibration_windows: u64,
}

/// Estimates, by simulation, how often a window with two events at the counter
/// registers only one of them.
///
/// Returns a merge probability of 0 when no qualifying window occurred.
pub fn calibrate_merge_prob(
    source: &SourceParams,
    analyzer: &AnalyzerParams,
    n_windows: u64,
    scope: MergeScope,
) -> Result<MergeCalibration> {
    if n_windows == 0 {
        return Err(Error::Config("calibration needs at least one window".into()));
    }
    analyzer.validate()?;
    let params = SourceParams {
        master_seed: source.master_seed.wrapping_add(CALIBRATION_SEED_OFFSET),
        ..source.clone()
    };
    let sim = Simulator::new(params)?;
    let span = counting_span(source);
    let seed = sim.params().master_seed;
    let outcomes = sim.map_windows(n_windows, |rec| {
        let events = counter_events(&rec.emitted, analyzer, span, seed, rec.window_index);
        if events.len() != 2 {
            return None;
        }
        if scope == MergeScope::GatedPairs {
            let in_gate = |t: f64| rec.gate_interval.is_some_and(|g| g.contains(t));
            if !events.iter().all(|e| e.origin == EventOrigin::Photon && in_gate(e.t)) {
                return None;
            }
        }
        let times = [events[0].t, events[1].t];
        Some(registered_indices(&times, analyzer.dead_time, analyzer.paralyzable).len() == 1)
    });
    let two_event_windows = outcomes.iter().flatten().count() as u64;
    let merged_windows = outcomes.iter().flatten().filter(|&&m| m).count() as u64;
    Ok(MergeCalibration {
        scope,
        merge_prob: if two_event_windows == 0 {
            0.0
        } else {
            merged_windows as f64 / two_event_windows as f64
        },
        two_event_windows,
        merged_windows,
        calibration_windows: n_windows,
    })
}

/// Undoes the enabled count corrections in the given order.
pub fn apply_corrections(
    measured: &PhotonDist,
    corrections: Corrections,
    order: CorrectionOrder,
    dark_mean: f64,
    merge_prob: f64,
) -> Result<PhotonDist> {
    let deadtime = |p: PhotonDist| {
        if corrections.deadtime {
            deadtime_correct(&p, merge_prob)
        } else {
            Ok(p)
        }
    };
    let dark = |p: PhotonDist| {
        if corrections.dark {
            dark_correct(&p, dark_mean)
        } else {
            Ok(p)
        }
    };
    let start = measured.clone().without_sigma();
    match order {
        CorrectionOrder::DeadtimeFirst => dark(deadtime(start)?),
        CorrectionOrder::DarkFirst => deadtime(dark(start)?),
    }
}

/// Everything needed to turn measured fractions into an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub budget: EfficiencyBudget,
    pub n_max: Option<usize>,
    pub corrections: Corrections,
    pub order: CorrectionOrder,
    pub dark_mean: f64,
    pub merge_prob: f64,
    /// 0 disables uncertainty propagation.
    pub n_uncertainty_samples: usize,
    pub seed: u64,
}

impl AnalysisSettings {
    /// Settings from a run config, with a resolved merge probability.
    pub fn from_config(cfg: &RunConfig, merge_prob: f64) -> Self {
        AnalysisSettings {
            budget: cfg.analyzer.budget(),
            n_max: cfg.analysis.n_max,
            corrections: cfg.analysis.corrections,
            order: cfg.analysis.order,
            dark_mean: cfg.dark_mean(),
            merge_prob,
            n_uncertainty_samples: cfg.analysis.n_uncertainty_samples,
            seed: cfg.source.master_seed,
        }
    }
}

/// Merge probability from the config, or calibrated by simulation when dead-time
/// correction is on and no value is given.
pub fn resolve_merge_prob(cfg: &RunConfig) -> Result<(f64, Option<MergeCalibration>)> {
    match cfg.analysis.merge_prob {
        Some(m) => Ok((m, None)),
        None if cfg.analysis.corrections.deadtime => {
            let cal = calibrate_merge_prob(
                &cfg.source,
                &cfg.analyzer,
                cfg.analysis.calibration_windows,
                MergeScope::AllPairs,
            )?;
            Ok((cal.merge_prob, Some(cal)))
        }
        None => Ok((0.0, None)),
    }
}

/// The source distribution set against coherent light matched by mean and by P(2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WclComparison {
    pub mu_same_mean: f64,
    pub mu_same_p2: f64,
    pub source: PhotonDist,
    pub same_mean: PhotonDist,
    pub same_p2: PhotonDist,
    /// P(1) of the source exceeds that of coherent light with the same mean.
    pub p1_above_same_mean: bool,
    /// P(2) of the source is below that of coherent light with the same mean.
    pub p2_below_same_mean: bool,
    /// P(1) of the source over P(1) of coherent light with the same P(2).
    pub p1_ratio_same_p2: f64,
}

pub fn compare_wcl(source: &PhotonDist) -> Result<WclComparison> {
    let mu_same_mean = match_wcl_by_mean(source);
    if mu_same_mean <= 0.0 {
        return Err(Error::InvalidArgument(
            "cannot compare a vacuum distribution with coherent light".into(),
        ));
    }
    let n_max = source.n_max().max(2);
    let source = carry_sigma(source.resized(n_max)?, source);
    let mu_same_p2 = match_wcl_by_p2(source.get(2))?;
    let same_mean = poisson_dist(mu_same_mean, n_max)?;
    let same_p2 = poisson_dist(mu_same_p2, n_max)?;
    Ok(WclComparison {
        p1_above_same_mean: source.get(1) > same_mean.get(1),
        p2_below_same_mean: source.get(2) < same_mean.get(2),
        p1_ratio_same_p2: source.get(1) / poisson_pmf(mu_same_p2, 1),
        mu_same_mean,
        mu_same_p2,
        source,
        same_mean,
        same_p2,
    })
}

impl WclComparison {
    /// Rows `(j, P_source, P_wcl_mean, P_wcl_p2)`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..=self.source.n_max())
            .map(|j| vec![j as f64, self.source.get(j), self.same_mean.get(j), self.same_p2.get(j)])
            .collect()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>3}  {:>10}  {:>12}  {:>12}\n",
            "j", "source", "WCL same <n>", "WCL same P2"
        ));
        for j in 0..=self.source.n_max() {
            out.push_str(&format!(
                "{:>3}  {:>10.5}  {:>12.5}  {:>12.5}\n",
                j,
                self.source.get(j),
                self.same_mean.get(j),
                self.same_p2.get(j)
            ));
        }
        out.push_str(&format!(
            "mu(same mean) = {:.5}, mu(same P2) = {:.5}\n",
            self.mu_same_mean, self.mu_same_p2
        ));
        out.push_str(&format!(
            "P(1) above same-mean WCL: {} ({:.4} vs {:.4})\n",
            self.p1_above_same_mean,
            self.source.get(1),
            self.same_mean.get(1)
        ));
        out.push_str(&format!(
            "P(2) below same-mean WCL: {} ({:.4} vs {:.4})\n",
            self.p2_below_same_mean,
            self.source.get(2),
            self.same_mean.get(2)
        ));
        out.push_str(&format!("P(1) ratio vs same-P2 WCL: {:.3}\n", self.p1_ratio_same_p2));
        out
    }
}

fn carry_sigma(resized: PhotonDist, original: &PhotonDist) -> PhotonDist {
    match original.sigma() {
        Some(s) => {
            let mut s = s.to_vec();
            s.resize(resized.probs().len(), 0.0);
            resized.with_sigma(s).expect("matching length")
        }
        None => resized,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    pub measured: PhotonDist,
    pub n_windows: Option<u64>,
    pub corrected: PhotonDist,
    pub n_max: usize,
    /// Point estimate; sigma from Monte Carlo when uncertainty sampling ran.
    pub estimate: PhotonDist,
    /// Sample mean of the Monte Carlo estimates.
    pub sampled_mean: Option<PhotonDist>,
    pub rejected_samples: usize,
    pub diagnostics: Diagnostics,
    pub wcl: Option<WclComparison>,
    /// Largest change in any estimated P(j) when the correction order is swapped.
    pub order_sensitivity: Option<f64>,
}

/// Correction, inversion, uncertainty and diagnostics for measured count fractions.
pub fn analyze(measured: &PhotonDist, n_windows: Option<u64>, settings: &AnalysisSettings) -> Result<AnalysisOutcome> {
    let eta = settings.budget.effective;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let corrected = apply_corrections(
        measured,
        settings.corrections,
        settings.order,
        settings.dark_mean,
        settings.merge_prob,
    )?;
    let n_max = match settings.n_max {
        Some(n) if n < measured.highest_nonzero() => {
            return Err(Error::InvalidArgument(format!(
                "n_max = {n} is below the highest observed count {}",
                measured.highest_nonzero()
            )))
        }
        Some(n) => n,
        None => measured.highest_nonzero(),
    };
    let point = invert_loss(&corrected, eta, n_max)?;

    let (estimate, sampled_mean, rejected_samples) = if settings.n_uncertainty_samples > 0 {
        let r = propagate_eta_uncertainty(
            &corrected,
            &settings.budget,
            UncertaintyOptions {
                n_samples: settings.n_uncertainty_samples,
                n_windows,
                n_max,
                seed: settings.seed,
            },
        )?;
        let sigma = r.sampled.sigma().expect("sampled result carries sigma").to_vec();
        (point.clone().with_sigma(sigma)?, Some(r.sampled), r.rejected)
    } else {
        (point.clone(), None, 0)
    };

    let order_sensitivity = (settings.corrections.dark && settings.corrections.deadtime)
        .then(|| {
            apply_corrections(
                measured,
                settings.corrections,
                settings.order.other(),
                settings.dark_mean,
                settings.merge_prob,
            )
            .and_then(|alt| invert_loss(&alt, eta, n_max))
            .map(|alt| alt.max_abs_diff(&point))
            .ok()
        })
        .flatten();

    let diagnostics = Diagnostics::of(&point);
    let wcl = if diagnostics.mean > 0.0 {
        Some(compare_wcl(&estimate)?)
    } else {
        None
    };
    Ok(AnalysisOutcome {
        measured: measured.clone(),
        n_windows,
        corrected,
        n_max,
        estimate,
        sampled_mean,
        rejected_samples,
        diagnostics,
        wcl,
        order_sensitivity,
    })
}

/// Approximate emitted-photon distribution for a parameter set, without simulation.
///
/// A window either has no gate (probability e^{−m}, all photons come from leakage) or
/// one gate holding the heralded photon plus Poisson accidentals from pairs arriving
/// inside the gate and leakage elsewhere. Window-edge effects are ignored.
pub fn predict_emission(source: &SourceParams, n_max: usize) -> Result<PhotonDist> {
    source.validate()?;
    let reach = source.coupling_eff * source.delay_transmittance;
    let rate = source.pair_rate * reach;
    let open = source.shutter_open.min(source.window_duration);
    let aligned =
        source.delay_latency >= source.gate_latency && source.delay_latency < source.gate_latency + source.shutter_open;
    let herald = reach
        * if aligned {
            source.shutter_transmittance
        } else {
            source.shutter_leakage
        };
    let vacuum_gate = source.vacuum_gate_prob();
    let closed_mean = rate * source.window_duration * source.shutter_leakage;
    let gated_mean =
        rate * (open * source.shutter_transmittance + (source.window_duration - open) * source.shutter_leakage);
    let probs = (0..=n_max)
        .map(|n| {
            let shifted = if n > 0 { poisson_pmf(gated_mean, n - 1) } else { 0.0 };
            vacuum_gate * poisson_pmf(closed_mean, n)
                + (1.0 - vacuum_gate) * ((1.0 - herald) * poisson_pmf(gated_mean, n) + herald * shifted)
        })
        .collect();
    Ok(PhotonDist::unchecked(probs))
}
