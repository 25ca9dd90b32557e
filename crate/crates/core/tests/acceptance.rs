//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use gspdc::analyzer::{detect_window, CountingSpan};
use gspdc::pipeline::{self, compare_wcl, AnalysisSettings};
use gspdc::statkit::{
    budget_effective, fano, forward_loss, g2_zero, invert_loss, poisson_dist, propagate_eta_uncertainty,
    EfficiencyBudget, EfficiencyStage, PhotonDist, UncertaintyOptions,
};
use gspdc::{AnalyzerParams, RunConfig};

const REFERENCE_PPRIME: [f64; 3] = [0.9199, 0.0794, 0.0005];
const REFERENCE_DIST: [f64; 3] = [0.724, 0.265, 0.011];

type Check = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Poisson pmf straight from the definition.
fn poisson_ref(mu: f64, n: usize) -> f64 {
    (-mu).exp() * mu.powi(n as i32) / factorial(n)
}

fn efficiency_budget() -> Verdict {
    let stages: Vec<EfficiencyStage> = [0.70, 0.902, 0.492, 0.882]
        .iter()
        .enumerate()
        .map(|(i, &e)| EfficiencyStage::new(&format!("s{i}"), e, 0.0))
        .collect();
    let eta = budget_effective(&stages).effective;
    let defaults = AnalyzerParams::default().budget().effective;
    verdict(
        within(eta, 0.274, 0.001) && eta == defaults,
        format!("eta = {eta:.6} (default analyzer {defaults:.6})"),
    )
}

fn round_trip_inversion() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n_max = rng.random_range(0..=6usize);
        let w: Vec<f64> = (0..=n_max).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let p = PhotonDist::new(w.iter().map(|x| x / total).collect()).unwrap();
        let eta = rng.random_range(0.05..=1.0);
        let back = invert_loss(&forward_loss(&p, eta).unwrap(), eta, n_max).unwrap();
        worst = worst.max(back.max_abs_diff(&p));
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-10 && elapsed < Duration::from_secs(1),
        format!(
            "max error {worst:.3e} over 1000 cases in {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Chi-square statistic and degrees of freedom, pooling the upper tail until every
/// expected count is at least 5.
fn chi_square(observed: &[u64], expected_pmf: impl Fn(usize) -> f64, n: u64) -> (f64, usize) {
    let mut bins = Vec::new();
    let mut k = 0;
    let mut cum = 0.0;
    loop {
        let e = expected_pmf(k) * n as f64;
        let tail = (1.0 - cum - expected_pmf(k)) * n as f64;
        if tail < 5.0 {
            let obs_tail: u64 = observed.iter().skip(k).sum();
            bins.push((obs_tail as f64, (1.0 - cum) * n as f64));
            break;
        }
        bins.push((observed.get(k).copied().unwrap_or(0) as f64, e));
        cum += expected_pmf(k);
        k += 1;
    }
    let stat = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, bins.len() - 1)
}

fn thinned_poisson() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for mu in [0.1, 1.0, 5.0] {
        for eta in [0.274, 0.5, 0.9] {
            let thinned = forward_loss(&poisson_dist(mu, 30).unwrap(), eta).unwrap();
            for i in 0..=30 {
                worst = worst.max((thinned.get(i) - poisson_ref(eta * mu, i)).abs());
            }
        }
    }

    let analyzer = AnalyzerParams {
        dark_rate: 0.0,
        dead_time: 0.0,
        ..AnalyzerParams::default()
    };
    let eta = analyzer.eta();
    let mu = 1.0;
    let span = CountingSpan {
        start: 0.0,
        duration: 1.0e-4,
    };
    let n_windows = 1_000_000u64;
    let poisson = Poisson::new(mu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut observed = vec![0u64; 16];
    for k in 0..n_windows {
        let n = poisson.sample(&mut rng) as usize;
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * span.duration).collect();
        times.sort_by(f64::total_cmp);
        let c = detect_window(&times, &analyzer, span, 11, k);
        observed[c.min(15)] += 1;
    }
    let (stat, dof) = chi_square(&observed, |i| poisson_ref(eta * mu, i), n_windows);
    let p_value = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-12 && p_value > 0.01 && elapsed < Duration::from_secs(30),
        format!(
            "max pmf error {worst:.3e}; chi2 = {stat:.3} on {dof} dof, p = {p_value:.4}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn wcl_comparison() -> Verdict {
    let p = PhotonDist::new(REFERENCE_DIST.to_vec()).unwrap();
    let c = compare_wcl(&p).unwrap();
    let mean = REFERENCE_DIST[1] + 2.0 * REFERENCE_DIST[2];
    // Reference root of e^{-mu} mu^2 / 2 = P(2) by plain bisection.
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poisson_ref(mid, 2) < REFERENCE_DIST[2] {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu_p2 = 0.5 * (lo + hi);
    let oracle_ok = within(c.same_mean.get(1), poisson_ref(mean, 1), 1e-12)
        && within(c.same_mean.get(2), poisson_ref(mean, 2), 1e-12)
        && within(c.same_p2.get(1), poisson_ref(mu_p2, 1), 1e-10);
    let ratio = c.p1_ratio_same_p2;
    let pass = oracle_ok
        && within(c.same_mean.get(1), 0.217, 0.002)
        && within(c.same_mean.get(2), 0.0315, 0.002)
        && within(c.same_p2.get(1), 0.137, 0.002)
        && (1.8..=2.1).contains(&ratio)
        && c.p1_above_same_mean
        && c.p2_below_same_mean;
    verdict(
        pass,
        format!(
            "same mean: P(1) = {:.4}, P(2) = {:.4}; same P(2): P(1) = {:.4}; ratio {ratio:.3}",
            c.same_mean.get(1),
            c.same_mean.get(2),
            c.same_p2.get(1)
        ),
    )
}

fn sub_poissonian() -> Verdict {
    let p = PhotonDist::new(REFERENCE_DIST.to_vec()).unwrap();
    let f = fano(&p).unwrap();
    let g = g2_zero(&p).unwrap();
    let mean = REFERENCE_DIST[1] + 2.0 * REFERENCE_DIST[2];
    let second = REFERENCE_DIST[1] + 4.0 * REFERENCE_DIST[2];
    let f_ref = (second - mean * mean) / mean;
    let g_ref = 2.0 * REFERENCE_DIST[2] / (mean * mean);
    let pass = within(f, f_ref, 1e-12)
        && within(g, g_ref, 1e-12)
        && within(f, 0.79, 0.005)
        && within(g, 0.267, 0.005)
        && f < 1.0
        && g < 1.0;
    verdict(pass, format!("Fano = {f:.4}, g2(0) = {g:.4}"))
}

fn desk_reproduction() -> Verdict {
    let start = Instant::now();
    let cfg = RunConfig::reference_preset();
    let n = cfg.run.n_windows;
    let sim = pipeline::simulate(&cfg.source, &cfg.analyzer, n).unwrap();
    let vacuum = (-8.0f64).exp();
    let vacuum_sd = (vacuum * (1.0 - vacuum) / n as f64).sqrt();
    let control_ok = within(sim.mean_control, 8.0, 0.1);
    let vacuum_ok = within(sim.vacuum_gate_fraction, vacuum, 3.0 * vacuum_sd);

    let (merge_prob, _) = pipeline::resolve_merge_prob(&cfg).unwrap();
    let settings = AnalysisSettings::from_config(&cfg, merge_prob);
    let analysis = pipeline::analyze(&sim.registered.fractions(), Some(n), &settings).unwrap();
    let p1 = analysis.estimate.get(1);
    let mean = analysis.diagnostics.mean;
    let p1_ok = (0.24..=0.30).contains(&p1);
    let mean_ok = (0.26..=0.32).contains(&mean);

    // Gated pairs alone: no leakage, no dark counts.
    let mut gated = cfg.clone();
    gated.source.shutter_leakage = 0.0;
    gated.analyzer.dark_rate = 0.0;
    let gated_sim = pipeline::simulate(&gated.source, &gated.analyzer, n).unwrap();
    let gated_p2 = gated_sim.registered.fraction(2);
    let true_p2 = sim.emitted.fraction(2);
    let structural_ok = cfg.analyzer.dead_time >= cfg.source.shutter_open && gated_p2 < 1e-4 && true_p2 >= 5e-3;
    let elapsed = start.elapsed();

    verdict(
        control_ok && vacuum_ok && p1_ok && mean_ok && structural_ok && elapsed < Duration::from_secs(120),
        format!(
            "mean control {:.4} [{}]; vacuum-gate {:.3e} vs {vacuum:.3e} ± {:.1e} [{}]; \
             P(1) = {p1:.4} [{}]; <n> = {mean:.4} [{}]; gated P'(2) = {gated_p2:.1e}, \
             true P(2) = {true_p2:.4} [{}]; {:.1} s",
            sim.mean_control,
            ok(control_ok),
            sim.vacuum_gate_fraction,
            3.0 * vacuum_sd,
            ok(vacuum_ok),
            ok(p1_ok),
            ok(mean_ok),
            ok(structural_ok),
            elapsed.as_secs_f64()
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "out of range"
    }
}

fn uncertainty() -> Verdict {
    let start = Instant::now();
    let p = PhotonDist::new(REFERENCE_PPRIME.to_vec()).unwrap();
    let r = propagate_eta_uncertainty(
        &p,
        &EfficiencyBudget::lumped(0.274, 0.019),
        UncertaintyOptions {
            n_samples: 10_000,
            n_windows: Some(100_000),
            n_max: 2,
            seed: 7,
        },
    )
    .unwrap();
    let s1 = r.sampled.sigma().unwrap()[1];
    let elapsed = start.elapsed();
    verdict(
        (0.01..=0.03).contains(&s1) && elapsed < Duration::from_secs(10),
        format!("sigma[P(1)] = {s1:.4} in {:.2} s", elapsed.as_secs_f64()),
    )
}

fn run_cli(cwd: &Path, args: &[&str], threads: usize) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_gspdc"))
        .current_dir(cwd)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .expect("run gspdc");
    assert!(
        out.status.success(),
        "gspdc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Every output file in `dir`, with wall-clock lines removed.
fn numerical_files(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let kept: Vec<&str> = text.lines().filter(|l| !l.contains("wall_time_s")).collect();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                kept.join("\n"),
            )
        })
        .collect();
    files.sort();
    files
}

/// Runs every subcommand inside `root` with relative paths, so echoed configs match.
fn cli_outputs(threads: usize, root: &Path) -> Vec<(String, String)> {
    let run = |args: &[&str]| run_cli(root, args, threads);
    run(&["simulate", "--windows", "20000", "--records", "--out", "sim"]);
    run(&[
        "analyze",
        "--hist",
        "sim/histogram.csv",
        "--samples",
        "2000",
        "--out",
        "ana",
    ]);
    let compare = run(&["compare", "--probs", "0.724,0.265,0.011", "--out", "cmp"]);
    let sweep = run(&[
        "sweep",
        "--param",
        "pair_rate",
        "--grid",
        "5e5,1e6",
        "--mode",
        "simulate",
        "--windows",
        "5000",
        "--out",
        "swp",
    ]);
    run(&["reproduce", "--windows", "20000", "--samples", "1000", "--out", "rep"]);
    // Terminal output of the commands that print no timing.
    let mut all = vec![
        ("compare stdout".to_string(), compare),
        ("sweep stdout".to_string(), sweep),
    ];
    for sub in ["sim", "ana", "cmp", "swp", "rep"] {
        all.extend(
            numerical_files(&root.join(sub))
                .into_iter()
                .map(|(n, t)| (format!("{sub}/{n}"), t)),
        );
    }
    all
}

fn determinism() -> Verdict {
    let cfg = RunConfig::reference_preset();
    let in_process = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let sim = pipeline::simulate(&cfg.source, &cfg.analyzer, 20_000).unwrap();
                let (m, _) = pipeline::resolve_merge_prob(&cfg).unwrap();
                let settings = AnalysisSettings::from_config(&cfg, m);
                let a = pipeline::analyze(&sim.registered.fractions(), Some(sim.n_windows), &settings).unwrap();
                gspdc::io::to_json_pretty(&(sim, a))
            })
    };
    let lib_same = in_process(1) == in_process(4);

    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let one = cli_outputs(1, dirs[0].path());
    let one_again = cli_outputs(1, dirs[1].path());
    let many = cli_outputs(4, dirs[2].path());
    let differing: Vec<&str> = one
        .iter()
        .zip(&many)
        .zip(&one_again)
        .filter(|((a, b), c)| a != b || a != c)
        .map(|((a, _), _)| a.0.as_str())
        .collect();
    let cli_same = differing.is_empty() && one.len() == many.len() && one.len() == one_again.len();
    verdict(
        lib_same && cli_same,
        format!(
            "library 1 vs 4 threads identical: {lib_same}; {} CLI outputs compared across 3 runs, differing: {:?}",
            one.len(),
            differing
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("efficiency budget", efficiency_budget),
        ("round-trip inversion", round_trip_inversion),
        ("thinned-Poisson law", thinned_poisson),
        ("weak coherent light comparison", wcl_comparison),
        ("sub-Poissonian diagnostics", sub_poissonian),
        ("end-to-end desk-scale reproduction", desk_reproduction),
        ("uncertainty propagation", uncertainty),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "acceptance {} {name}: {} ({})",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
