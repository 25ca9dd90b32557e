//! Discrete-event Monte Carlo of the gated pair source.
//!
//! Each window is simulated in isolation: Poisson pair generation, Bernoulli thinning
//! on the control arm, a single shutter opening after the first control detection, and
//! the signal photons' loss chain (fiber coupling, delay line, shutter). Randomness for
//! window `k` comes only from streams keyed by `(master_seed, k)`, so windows can be
//! evaluated in any order or in parallel.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamTag};

/// Physical timing and efficiency parameters of the source. Times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceParams {
    /// Pair generation rate (pairs per second).
    pub pair_rate: f64,
    pub window_duration: f64,
    /// Lumped control-arm detection probability per pair.
    pub control_det_eff: f64,
    /// Fiber-coupling (collection) efficiency of the signal arm.
    pub coupling_eff: f64,
    pub delay_transmittance: f64,
    /// Signal propagation delay from creation to the shutter.
    pub delay_latency: f64,
    /// Time from a control detection to the shutter opening.
    pub gate_latency: f64,
    pub shutter_open: f64,
    pub shutter_transmittance: f64,
    /// Transmission of the closed shutter.
    pub shutter_leakage: f64,
    pub master_seed: u64,
}

impl Default for SourceParams {
    fn default() -> Self {
        let gate_latency = 1.5e-7;
        let shutter_open = 5.0e-8;
        SourceParams {
            pair_rate: 1.0e6,
            window_duration: 1.0e-4,
            control_det_eff: 0.08,
            coupling_eff: 0.68,
            delay_transmittance: 0.50,
            delay_latency: gate_latency + shutter_open / 2.0,
            gate_latency,
            shutter_open,
            shutter_transmittance: 0.83,
            shutter_leakage: 1.0e-3,
            master_seed: 0x005e_ed0f_6a7e,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return Err(Error::Config(format!(
                "pair_rate must be non-negative and finite, got {}",
                self.pair_rate
            )));
        }
        check_positive("window_duration", self.window_duration)?;
        check_positive("delay_latency", self.delay_latency)?;
        check_positive("gate_latency", self.gate_latency)?;
        check_positive("shutter_open", self.shutter_open)?;
        check_probability("control_det_eff", self.control_det_eff)?;
        check_probability("coupling_eff", self.coupling_eff)?;
        check_probability("delay_transmittance", self.delay_transmittance)?;
        check_probability("shutter_transmittance", self.shutter_transmittance)?;
        check_probability("shutter_leakage", self.shutter_leakage)?;
        if self.shutter_leakage > self.shutter_transmittance {
            return Err(Error::Config(format!(
                "shutter_leakage ({}) exceeds shutter_transmittance ({})",
                self.shutter_leakage, self.shutter_transmittance
            )));
        }
        if self.delay_latency < self.gate_latency {
            return Err(Error::Config(format!(
                "delay_latency ({}) is shorter than gate_latency ({}): heralded photons would reach the shutter before it opens",
                self.delay_latency, self.gate_latency
            )));
        }
        Ok(())
    }

    /// Expected pairs per window.
    pub fn mean_pairs(&self) -> f64 {
        self.pair_rate * self.window_duration
    }

    /// Expected control detections per window.
    pub fn mean_control(&self) -> f64 {
        self.mean_pairs() * self.control_det_eff
    }

    /// Probability that no control photon is detected, so the shutter never opens.
    pub fn vacuum_gate_prob(&self) -> f64 {
        (-self.mean_control()).exp()
    }

    /// Probability that a heralding pair's signal photon makes it through an open shutter.
    pub fn heralded_pass_prob(&self) -> f64 {
        self.coupling_eff * self.delay_transmittance * self.shutter_transmittance
    }
}

/// One signal/control pair, created simultaneously at `t` within the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateInterval {
    pub t_open: f64,
    pub t_close: f64,
}

impl GateInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.t_open <= t && t < self.t_close
    }
}

/// Everything that happened in one gate window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window_index: u64,
    pub pairs: Vec<PairEvent>,
    pub control_detections: Vec<f64>,
    pub gate_interval: Option<GateInterval>,
    /// Shutter-arrival times of the signal photons that got through.
    pub emitted: Vec<f64>,
}

/// Draws the pair events of one window: Poisson count, uniform sorted times.
pub fn generate_pairs(params: &SourceParams, window_index: u64) -> Vec<PairEvent> {
    let mean = params.mean_pairs();
    if mean <= 0.0 {
        return Vec::new();
    }
    let mut rng = rng::stream(params.master_seed, window_index, StreamTag::Pairs);
    let count = Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as usize;
    let mut times: Vec<f64> = (0..count)
        .map(|_| rng.random::<f64>() * params.window_duration)
        .collect();
    times.sort_by(f64::total_cmp);
    times.into_iter().map(|t| PairEvent { t }).collect()
}

/// Bernoulli thinning of the pair times on the control arm.
pub fn detect_control(pairs: &[PairEvent], params: &SourceParams, window_index: u64) -> Vec<f64> {
    let mut rng = rng::stream(params.master_seed, window_index, StreamTag::Control);
    pairs
        .iter()
        .filter(|_| rng.random::<f64>() < params.control_det_eff)
        .map(|p| p.t)
        .collect()
}

/// Opens the shutter once, `gate_latency` after the first control detection.
pub fn gate_controller(control_detections: &[f64], params: &SourceParams) -> Option<GateInterval> {
    control_detections.first().map(|&t0| {
        let t_open = t0 + params.gate_latency;
        GateInterval {
            t_open,
            t_close: t_open + params.shutter_open,
        }
    })
}

/// Pushes every signal photon through coupling, delay line and shutter.
///
/// Three uniforms are drawn per pair regardless of earlier outcomes, so with a fixed
/// seed raising any transmittance can only add photons.
pub fn propagate_signal(
    pairs: &[PairEvent],
    gate: Option<GateInterval>,
    params: &SourceParams,
    window_index: u64,
) -> Result<Vec<f64>> {
    if let Some(g) = gate {
        let horizon = params.window_duration + params.delay_latency;
        if g.t_open > g.t_close || g.t_open.is_nan() || g.t_open < 0.0 || g.t_open >= horizon {
            return Err(Error::Config(format!(
                "gate interval [{}, {}) is inconsistent with the signal arrival span [{}, {})",
                g.t_open, g.t_close, params.delay_latency, horizon
            )));
        }
    }
    Ok(propagate_unchecked(pairs, gate, params, window_index))
}

fn propagate_unchecked(
    pairs: &[PairEvent],
    gate: Option<GateInterval>,
    params: &SourceParams,
    window_index: u64,
) -> Vec<f64> {
    let mut rng = rng::stream(params.master_seed, window_index, StreamTag::Signal);
    let mut emitted = Vec::new();
    for pair in pairs {
        let coupled = rng.random::<f64>() < params.coupling_eff;
        let delayed = rng.random::<f64>() < params.delay_transmittance;
        let u_shutter = rng.random::<f64>();
        if !(coupled && delayed) {
            continue;
        }
        let arrival = pair.t + params.delay_latency;
        let pass = match gate {
            Some(g) if g.contains(arrival) => params.shutter_transmittance,
            _ => params.shutter_leakage,
        };
        if u_shutter < pass {
            emitted.push(arrival);
        }
    }
    // Pairs are sorted and the latency is constant, so arrivals already are.
    emitted
}

/// A validated parameter set that simulates windows on demand.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SourceParams,
}

impl Simulator {
    pub fn new(params: SourceParams) -> Result<Self> {
        params.validate()?;
        Ok(Simulator { params })
    }

    pub fn params(&self) -> &SourceParams {
        &self.params
    }

    pub fn window(&self, window_index: u64) -> WindowRecord {
        let p = &self.params;
        let pairs = generate_pairs(p, window_index);
        let control_detections = detect_control(&pairs, p, window_index);
        let gate_interval = gate_controller(&control_detections, p);
        let emitted = propagate_unchecked(&pairs, gate_interval, p, window_index);
        WindowRecord {
            window_index,
            pairs,
            control_detections,
            gate_interval,
            emitted,
        }
    }

    /// Maps every window through `f` in parallel, returning results in window order.
    pub fn map_windows<T, F>(&self, n_windows: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(WindowRecord) -> T + Sync + Send,
    {
        (0..n_windows).into_par_iter().map(|k| f(self.window(k))).collect()
    }
}

/// Single-window convenience wrapper.
pub fn simulate_window(params: &SourceParams, window_index: u64) -> Result<WindowRecord> {
    Ok(Simulator::new(params.clone())?.window(window_index))
}

/// Lazily simulates `n_windows` windows in parallel chunks, yielding them in index order.
pub fn simulate_run(params: &SourceParams, n_windows: u64) -> Result<RunStream> {
    if n_windows == 0 {
        return Err(Error::Config("n_windows must be at least 1".into()));
    }
    Ok(RunStream {
        sim: Simulator::new(params.clone())?,
        next: 0,
        end: n_windows,
        buffer: VecDeque::new(),
    })
}

const CHUNK: u64 = 4096;

pub struct RunStream {
    sim: Simulator,
    next: u64,
    end: u64,
    buffer: VecDeque<WindowRecord>,
}

impl Iterator for RunStream {
    type Item = WindowRecord;

    fn next(&mut self) -> Option<WindowRecord> {
        if self.buffer.is_empty() && self.next < self.end {
            let stop = (self.next + CHUNK).min(self.end);
            let sim = &self.sim;
            let chunk: Vec<WindowRecord> = (self.next..stop).into_par_iter().map(|k| sim.window(k)).collect();
            self.buffer.extend(chunk);
            self.next = stop;
        }
        self.buffer.pop_front()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.buffer.len() + (self.end - self.next) as usize;
        (n, Some(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless() -> SourceParams {
        SourceParams {
            coupling_eff: 1.0,
            delay_transmittance: 1.0,
            shutter_transmittance: 1.0,
            shutter_leakage: 0.0,
            ..SourceParams::default()
        }
    }

    #[test]
    fn defaults_are_valid_and_give_eight_control_detections() {
        let p = SourceParams::default();
        p.validate().unwrap();
        assert!((p.mean_control() - 8.0).abs() < 1e-12);
        assert!((p.delay_latency - 1.75e-7).abs() < 1e-20);
        assert!((p.delay_transmittance * p.shutter_transmittance - 0.415).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            SourceParams {
                coupling_eff: 1.2,
                ..Default::default()
            },
            SourceParams {
                window_duration: 0.0,
                ..Default::default()
            },
            SourceParams {
                shutter_leakage: 0.9,
                ..Default::default()
            },
            SourceParams {
                delay_latency: 1.0e-7,
                ..Default::default()
            },
            SourceParams {
                pair_rate: -1.0,
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::Config(_))), "{p:?}");
        }
    }

    #[test]
    fn zero_rate_gives_no_pairs() {
        let p = SourceParams {
            pair_rate: 0.0,
            ..Default::default()
        };
        assert!(generate_pairs(&p, 0).is_empty());
    }

    #[test]
    fn pairs_sorted_inside_window_and_deterministic() {
        let p = SourceParams::default();
        let a = generate_pairs(&p, 17);
        assert_eq!(a, generate_pairs(&p, 17));
        assert!(a.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(a.iter().all(|e| (0.0..p.window_duration).contains(&e.t)));
    }

    #[test]
    fn control_detection_extremes() {
        let p = SourceParams::default();
        let pairs = generate_pairs(&p, 3);
        let all = SourceParams {
            control_det_eff: 1.0,
            ..p.clone()
        };
        let none = SourceParams {
            control_det_eff: 0.0,
            ..p.clone()
        };
        let times: Vec<f64> = pairs.iter().map(|e| e.t).collect();
        assert_eq!(detect_control(&pairs, &all, 3), times);
        assert!(detect_control(&pairs, &none, 3).is_empty());
    }

    #[test]
    fn gate_timing() {
        let p = SourceParams::default();
        assert_eq!(gate_controller(&[], &p), None);
        let g = gate_controller(&[10e-6, 20e-6], &p).unwrap();
        assert!((g.t_open - 10.15e-6).abs() < 1e-15);
        assert!((g.t_close - 10.20e-6).abs() < 1e-15);
        let g = gate_controller(&[3.3e-5], &p).unwrap();
        assert!((g.t_close - g.t_open - p.shutter_open).abs() < 1e-18);
    }

    #[test]
    fn lossless_photon_in_gate_is_emitted() {
        let p = lossless();
        let pairs = [PairEvent { t: 1.0e-5 }];
        let gate = gate_controller(&[1.0e-5], &p);
        let out = propagate_signal(&pairs, gate, &p, 0).unwrap();
        assert_eq!(out, vec![1.0e-5 + p.delay_latency]);
    }

    #[test]
    fn photon_outside_gate_blocked_without_leakage() {
        let p = lossless();
        let pairs = [PairEvent { t: 1.0e-5 }, PairEvent { t: 5.0e-5 }];
        let gate = gate_controller(&[1.0e-5], &p);
        for k in 0..200 {
            let out = propagate_signal(&pairs, gate, &p, k).unwrap();
            assert_eq!(out.len(), 1);
        }
        assert!(propagate_signal(&pairs, None, &p, 0).unwrap().is_empty());
    }

    #[test]
    fn gate_beyond_arrival_span_is_an_error() {
        let p = SourceParams::default();
        let late = GateInterval {
            t_open: 2.0e-4,
            t_close: 2.0e-4 + 5e-8,
        };
        assert!(propagate_signal(&[], Some(late), &p, 0).is_err());
        let inverted = GateInterval {
            t_open: 2.0e-5,
            t_close: 1.0e-5,
        };
        assert!(propagate_signal(&[], Some(inverted), &p, 0).is_err());
    }

    #[test]
    fn empty_window_has_no_gate() {
        let p = SourceParams {
            pair_rate: 0.0,
            ..Default::default()
        };
        let recs: Vec<_> = simulate_run(&p, 1).unwrap().collect();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].gate_interval.is_none());
        assert!(recs[0].emitted.is_empty());
    }

    #[test]
    fn zero_windows_rejected() {
        assert!(simulate_run(&SourceParams::default(), 0).is_err());
    }

    #[test]
    fn record_invariants_hold() {
        let p = SourceParams::default();
        for rec in simulate_run(&p, 500).unwrap() {
            assert_eq!(rec.gate_interval.is_some(), !rec.control_detections.is_empty());
            if let Some(g) = rec.gate_interval {
                assert_eq!(g.t_open, rec.control_detections[0] + p.gate_latency);
                assert_eq!(g.t_close, g.t_open + p.shutter_open);
            }
            assert!(rec.emitted.windows(2).all(|w| w[0] <= w[1]));
            let arrivals: Vec<f64> = rec.pairs.iter().map(|e| e.t + p.delay_latency).collect();
            assert!(rec.emitted.iter().all(|t| arrivals.contains(t)));
        }
    }

    #[test]
    fn stream_matches_direct_evaluation() {
        let p = SourceParams {
            pair_rate: 2.0e5,
            ..Default::default()
        };
        let sim = Simulator::new(p.clone()).unwrap();
        let streamed: Vec<_> = simulate_run(&p, 5000).unwrap().collect();
        assert_eq!(streamed.len(), 5000);
        for k in [0u64, 1, 4095, 4096, 4999] {
            assert_eq!(streamed[k as usize], sim.window(k));
        }
    }
}
