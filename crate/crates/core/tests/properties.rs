use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use gspdc::pipeline::{self, AnalysisSettings};
use gspdc::source::{simulate_run, simulate_window, Simulator};
use gspdc::statkit::{propagate_eta_uncertainty, EfficiencyBudget, UncertaintyOptions};
use gspdc::{RunConfig, SourceParams};

fn poisson_pmf(mu: f64, n: usize) -> f64 {
    (1..=n).fold((-mu).exp(), |p, k| p * mu / k as f64)
}

/// p-value of a chi-square goodness-of-fit test; bins whose expected count falls
/// below 5 are pooled into the upper tail.
fn chi_square_p(counts: &[usize], pmf: impl Fn(usize) -> f64) -> f64 {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0u64; max + 1];
    for &c in counts {
        observed[c] += 1;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cum = 0.0;
    let mut k = 0;
    loop {
        let tail_after = (1.0 - cum - pmf(k)) * n;
        if tail_after < 5.0 || k > max {
            let obs: u64 = observed.iter().skip(k).sum();
            bins.push((obs as f64, (1.0 - cum) * n));
            break;
        }
        bins.push((observed.get(k).copied().unwrap_or(0) as f64, pmf(k) * n));
        cum += pmf(k);
        k += 1;
    }
    // Merge low-expectation bins at the bottom into their neighbour.
    while bins.len() > 1 && bins[0].1 < 5.0 {
        let (o, e) = bins.remove(0);
        bins[0].0 += o;
        bins[0].1 += e;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (bins.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

#[test]
fn control_detections_follow_thinned_poisson() {
    let params = SourceParams::default();
    let counts = Simulator::new(params.clone())
        .unwrap()
        .map_windows(1_000_000, |rec| rec.control_detections.len());
    let m = params.mean_control();
    let p = chi_square_p(&counts, |k| poisson_pmf(m, k));
    assert!(p > 0.01, "p = {p}");
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!((mean - m).abs() < 3.0 * (m / counts.len() as f64).sqrt(), "{mean}");
}

#[test]
fn pair_counts_and_vacuum_gates() {
    let params = SourceParams::default();
    let stats = Simulator::new(params)
        .unwrap()
        .map_windows(100_000, |rec| (rec.pairs.len(), rec.gate_interval.is_none()));
    let n = stats.len() as f64;
    let mean = stats.iter().map(|s| s.0 as f64).sum::<f64>() / n;
    assert!((mean - 100.0).abs() < 0.3, "{mean}");
    assert!(stats.iter().all(|s| s.0 > 0));
    let vacuum = stats.iter().filter(|s| s.1).count() as f64 / n;
    let expected = (-8.0f64).exp();
    assert!((vacuum - expected).abs() < 4.0 * (expected / n).sqrt(), "{vacuum}");
}

#[test]
fn fully_open_gate_gives_thinned_poisson_emission() {
    let params = SourceParams {
        control_det_eff: 1.0,
        delay_latency: 1.5e-7,
        gate_latency: 1.5e-7,
        shutter_open: 1.0e-4,
        shutter_leakage: 0.0,
        pair_rate: 2.0e4,
        ..SourceParams::default()
    };
    // The first pair opens the gate and every later arrival falls inside it.
    let counts = Simulator::new(params.clone())
        .unwrap()
        .map_windows(200_000, |rec| rec.emitted.len());
    let mu = params.mean_pairs() * params.coupling_eff * params.delay_transmittance * params.shutter_transmittance;
    let p = chi_square_p(&counts, |k| poisson_pmf(mu, k));
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn emission_times_lie_in_arrival_span() {
    let params = SourceParams::default();
    for rec in simulate_run(&params, 2000).unwrap() {
        assert!(rec.pairs.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(rec.pairs.iter().all(|p| (0.0..params.window_duration).contains(&p.t)));
        let span = params.delay_latency..params.delay_latency + params.window_duration;
        assert!(rec.emitted.iter().all(|t| span.contains(t)));
        assert!(rec.emitted.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(rec.gate_interval.is_some(), !rec.control_detections.is_empty());
    }
}

#[test]
fn without_leakage_nothing_precedes_the_gate() {
    let params = SourceParams {
        shutter_leakage: 0.0,
        ..SourceParams::default()
    };
    for rec in simulate_run(&params, 5000).unwrap() {
        match rec.gate_interval {
            Some(g) => assert!(rec.emitted.iter().all(|&t| g.contains(t))),
            None => assert!(rec.emitted.is_empty()),
        }
    }
}

#[test]
fn run_is_independent_of_thread_count() {
    let params = SourceParams::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_run(&params, 10_000).unwrap().collect::<Vec<_>>())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
    assert_eq!(one[1234], simulate_window(&params, 1234).unwrap());
}

#[test]
fn simulation_matches_analytic_emission() {
    let params = SourceParams::default();
    let cfg = RunConfig::reference_preset();
    let sim = pipeline::simulate(&params, &cfg.analyzer, 100_000).unwrap();
    let predicted = pipeline::predict_emission(&params, 3).unwrap();
    let n = sim.n_windows as f64;
    for j in 0..=3 {
        let p = predicted.get(j);
        let sd = (p * (1.0 - p) / n).sqrt();
        let got = sim.emitted.fraction(j);
        assert!(
            (got - p).abs() < 4.0 * sd + 1e-3,
            "P({j}): simulated {got}, predicted {p}"
        );
    }
}

#[test]
fn analysis_recovers_true_emission() {
    let cfg = RunConfig::reference_preset();
    let sim = pipeline::simulate(&cfg.source, &cfg.analyzer, cfg.run.n_windows).unwrap();
    let (merge_prob, _) = pipeline::resolve_merge_prob(&cfg).unwrap();
    let mut settings = AnalysisSettings::from_config(&cfg, merge_prob);
    settings.n_uncertainty_samples = 0;
    let measured = sim.registered.fractions();
    let analysis = pipeline::analyze(&measured, Some(sim.n_windows), &settings).unwrap();
    // Counting error alone: efficiency fixed at its nominal value.
    let counting = propagate_eta_uncertainty(
        &analysis.corrected,
        &EfficiencyBudget::lumped(settings.budget.effective, 0.0),
        UncertaintyOptions {
            n_samples: 4000,
            n_windows: Some(sim.n_windows),
            n_max: analysis.n_max,
            seed: 5,
        },
    )
    .unwrap();
    let sigma = counting.sampled.sigma().unwrap();
    let truth = sim.emitted.fractions();
    for (j, s) in sigma.iter().enumerate().take(3) {
        let diff = (analysis.estimate.get(j) - truth.get(j)).abs();
        assert!(
            diff < 3.0 * s,
            "P({j}): estimate {} vs true {} (sigma {s})",
            analysis.estimate.get(j),
            truth.get(j)
        );
    }
}

fn transmittances() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(c, d, s, l)| (c, d, s, l.min(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_a_transmittance_never_removes_photons(
        (c, d, s, l) in transmittances(),
        which in 0usize..4,
        bump in 0.0..=1.0f64,
        window in 0u64..1_000_000,
    ) {
        let low = SourceParams {
            coupling_eff: c,
            delay_transmittance: d,
            shutter_transmittance: s,
            shutter_leakage: l,
            ..SourceParams::default()
        };
        let mut high = low.clone();
        match which {
            0 => high.coupling_eff = c + (1.0 - c) * bump,
            1 => high.delay_transmittance = d + (1.0 - d) * bump,
            2 => high.shutter_transmittance = s + (1.0 - s) * bump,
            _ => high.shutter_leakage = l + (high.shutter_transmittance - l) * bump,
        }
        let a = simulate_window(&low, window).unwrap();
        let b = simulate_window(&high, window).unwrap();
        prop_assert!(a.emitted.iter().all(|t| b.emitted.contains(t)));
        prop_assert!(a.emitted.len() <= b.emitted.len());
    }

    #[test]
    fn windows_depend_only_on_seed_and_index(seed in any::<u64>(), window in any::<u64>()) {
        let params = SourceParams { master_seed: seed, pair_rate: 1.0e5, ..SourceParams::default() };
        prop_assert_eq!(simulate_window(&params, window).unwrap(), simulate_window(&params, window).unwrap());
    }
}

#[test]
fn fraction_of_windows_with_emission() {
    let p = SourceParams::default();
    let counts = Simulator::new(p.clone())
        .unwrap()
        .map_windows(100_000, |rec| rec.emitted.len());
    let n = counts.len() as f64;
    let simulated = counts.iter().filter(|&&c| c > 0).count() as f64 / n;

    // Straight-line composition: a heralded photon passes with the full stage product;
    // every other coupled photon passes with the open-gate or closed-shutter value.
    let m = p.pair_rate * p.window_duration * p.control_det_eff;
    let reach = p.coupling_eff * p.delay_transmittance;
    let herald = reach * p.shutter_transmittance;
    let rate = p.pair_rate * reach;
    let leak_closed = rate * p.window_duration * p.shutter_leakage;
    let leak_gated =
        rate * (p.shutter_open * p.shutter_transmittance + (p.window_duration - p.shutter_open) * p.shutter_leakage);
    let p_none = (-m).exp() * (-leak_closed).exp() + (1.0 - (-m).exp()) * (1.0 - herald) * (-leak_gated).exp();
    let oracle = 1.0 - p_none;
    let sd = (oracle * (1.0 - oracle) / n).sqrt();
    assert!(
        (simulated - oracle).abs() < 4.0 * sd,
        "simulated {simulated}, oracle {oracle}"
    );
    // Heralded photons alone account for about 0.282; leakage and accidentals add the rest.
    assert!((herald * (1.0 - (-m).exp()) - 0.282).abs() < 1e-3);
    assert!(simulated > 0.30 && simulated < 0.33);
}
