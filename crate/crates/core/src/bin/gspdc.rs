use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gspdc::config::{CorrectionOrder, Corrections};
use gspdc::io;
use gspdc::pipeline::{self, AnalysisSettings, MergeCalibration};
use gspdc::report::{Provenance, Report, VacuumGate};
use gspdc::source::simulate_run;
use gspdc::statkit::{budget_effective, rate_sweep, EfficiencyBudget, EfficiencyStage, PhotonDist};
use gspdc::{Error, Result, RunConfig};

/// Gated SPDC single-photon source simulator and photon-counting analysis.
#[derive(Parser)]
#[command(name = "gspdc", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate source and analyzer; write the registered-count histogram.
    Simulate(SimulateArgs),
    /// Correct and invert measured count fractions into a photon-number estimate.
    Analyze(AnalyzeArgs),
    /// Compare a photon-number distribution with weak coherent light.
    Compare(CompareArgs),
    /// Sweep one source parameter and tabulate predicted statistics.
    Sweep(SweepArgs),
    /// Run the full reference reproduction with the bundled preset.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults to the bundled reference preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of gate windows.
    #[arg(long)]
    windows: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::reference_preset(),
        };
        if let Some(n) = self.windows {
            cfg.run.n_windows = n;
        }
        if let Some(s) = self.seed {
            cfg.source.master_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.run.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Also write every window as NDJSON to records.ndjson.
    #[arg(long)]
    records: bool,
    /// Histogram file format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct AnalysisFlags {
    /// Inversion truncation (default: highest observed count).
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    /// `none` or a comma list of `dark`, `deadtime`.
    #[arg(long)]
    corrections: Option<String>,
    /// deadtime-first or dark-first.
    #[arg(long)]
    order: Option<String>,
    /// Lumped analyzer efficiency, overrides the configured budget.
    #[arg(long, conflicts_with = "budget")]
    eta: Option<f64>,
    /// 1σ uncertainty of --eta.
    #[arg(long, requires = "eta", default_value_t = 0.0)]
    eta_sigma: f64,
    /// Efficiency budget file (TOML with [[stages]] name/efficiency/sigma).
    #[arg(long)]
    budget: Option<PathBuf>,
    /// Fixed dead-time merge probability instead of simulated calibration.
    #[arg(long)]
    merge_prob: Option<f64>,
    /// Uncertainty samples (0 disables).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: AnalysisFlags,
    /// Histogram CSV written by `simulate`.
    #[arg(long, conflicts_with = "pprime")]
    hist: Option<PathBuf>,
    /// Inline measured fractions P'(0),P'(1),...
    #[arg(long)]
    pprime: Option<String>,
    /// Estimate file format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    /// Distribution file (.json or .csv).
    #[arg(long, conflicts_with = "probs")]
    dist: Option<PathBuf>,
    /// Inline distribution P(0),P(1),...
    #[arg(long)]
    probs: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum SweepParam {
    #[value(name = "pair_rate")]
    PairRate,
    #[value(name = "window_duration")]
    WindowDuration,
    #[value(name = "control_det_eff")]
    ControlDetEff,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum SweepMode {
    Analytic,
    Simulate,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated grid values.
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, default_value = "analytic")]
    mode: SweepMode,
}

#[derive(Args)]
struct ReproduceArgs {
    #[command(flatten)]
    common: Common,
    /// Uncertainty samples (0 disables).
    #[arg(long)]
    samples: Option<usize>,
}

/// Reference raw count fractions from 1e5 windows, and the reference estimate.
const REFERENCE_PPRIME: [f64; 3] = [0.9199, 0.0794, 0.0005];
const REFERENCE_WINDOWS: u64 = 100_000;
const REFERENCE_DIST: [f64; 3] = [0.724, 0.265, 0.011];

fn out_dir(cfg: &RunConfig) -> &Path {
    &cfg.run.out_dir
}

fn apply_flags(cfg: &mut RunConfig, flags: &AnalysisFlags) -> Result<Option<EfficiencyBudget>> {
    if let Some(n) = flags.n_max {
        cfg.analysis.n_max = Some(n);
    }
    if let Some(c) = &flags.corrections {
        cfg.analysis.corrections = c.parse::<Corrections>()?;
    }
    if let Some(o) = &flags.order {
        cfg.analysis.order = o.parse::<CorrectionOrder>()?;
    }
    if let Some(m) = flags.merge_prob {
        cfg.analysis.merge_prob = Some(m);
    }
    if let Some(s) = flags.samples {
        cfg.analysis.n_uncertainty_samples = s;
    }
    cfg.validate()?;
    let budget = if let Some(eta) = flags.eta {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Config(format!("--eta must lie in (0, 1], got {eta}")));
        }
        Some(EfficiencyBudget::lumped(eta, flags.eta_sigma))
    } else if let Some(path) = &flags.budget {
        Some(load_budget(path)?)
    } else {
        None
    };
    Ok(budget)
}

fn load_budget(path: &Path) -> Result<EfficiencyBudget> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct BudgetFile {
        stages: Vec<EfficiencyStage>,
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: BudgetFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if file.stages.is_empty() {
        return Err(Error::Config(format!("{}: no stages", path.display())));
    }
    if let Some(s) = file
        .stages
        .iter()
        .find(|s| !(s.efficiency > 0.0 && s.efficiency <= 1.0))
    {
        return Err(Error::Config(format!("stage '{}' efficiency out of (0, 1]", s.name)));
    }
    Ok(budget_effective(&file.stages))
}

#[derive(Serialize)]
struct HistogramHeader<'a> {
    n_windows: u64,
    source: &'a gspdc::SourceParams,
    analyzer: &'a gspdc::AnalyzerParams,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config: &'a RunConfig,
    simulation: &'a pipeline::SimulationOutcome,
    emitted_fractions: PhotonDist,
    registered_fractions: PhotonDist,
    vacuum_gate_analytic: f64,
    provenance: Provenance,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = args.common.config()?;
    let sim = pipeline::simulate(&cfg.source, &cfg.analyzer, cfg.run.n_windows)?;
    let dir = out_dir(&cfg);
    let header = HistogramHeader {
        n_windows: sim.n_windows,
        source: &cfg.source,
        analyzer: &cfg.analyzer,
    };
    match args.format {
        Format::Csv => io::write_histogram_csv(&dir.join("histogram.csv"), &sim.registered, &header)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, H> {
                header: &'a H,
                histogram: &'a gspdc::CountHistogram,
            }
            io::write_json(
                &dir.join("histogram.json"),
                &Doc {
                    header: &header,
                    histogram: &sim.registered,
                },
            )?
        }
    }
    if args.records {
        io::write_records(
            &dir.join("records.ndjson"),
            simulate_run(&cfg.source, cfg.run.n_windows)?,
        )?;
    }
    let summary = SimulateSummary {
        config: &cfg,
        simulation: &sim,
        emitted_fractions: sim.emitted.fractions(),
        registered_fractions: sim.registered.fractions(),
        vacuum_gate_analytic: cfg.source.vacuum_gate_prob(),
        provenance: Provenance::new(cfg.source.master_seed, start.elapsed().as_secs_f64()),
    };
    io::write_json(&dir.join("simulate.json"), &summary)?;
    println!("windows: {}", sim.n_windows);
    println!(
        "mean control detections: {:.4} (vacuum-gate fraction {:.3e}, analytic {:.3e})",
        sim.mean_control,
        sim.vacuum_gate_fraction,
        cfg.source.vacuum_gate_prob()
    );
    for i in 0..=sim.registered.max_count() {
        println!(
            "P'({i}) = {:.5}  ({} windows)",
            sim.registered.fraction(i),
            sim.registered.count(i)
        );
    }
    for j in 0..=sim.emitted.max_count() {
        println!("emitted P({j}) = {:.5}", sim.emitted.fraction(j));
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn build_report(
    cfg: &RunConfig,
    budget: Option<EfficiencyBudget>,
    measured: &PhotonDist,
    n_windows: Option<u64>,
    histogram: Option<gspdc::CountHistogram>,
    simulation: Option<pipeline::SimulationOutcome>,
    started: Instant,
) -> Result<Report> {
    let (merge_prob, calibration): (f64, Option<MergeCalibration>) = pipeline::resolve_merge_prob(cfg)?;
    let mut settings = AnalysisSettings::from_config(cfg, merge_prob);
    if let Some(b) = budget {
        settings.budget = b;
    }
    let analysis = pipeline::analyze(measured, n_windows, &settings)?;
    let vacuum_gate = Some(VacuumGate {
        analytic: cfg.source.vacuum_gate_prob(),
        simulated: simulation.as_ref().map(|s| s.vacuum_gate_fraction),
    });
    Ok(Report {
        config: Some(cfg.clone()),
        settings,
        histogram,
        merge_calibration: calibration,
        simulation,
        analysis,
        vacuum_gate,
        provenance: Provenance::new(cfg.source.master_seed, started.elapsed().as_secs_f64()),
    })
}

fn write_estimate(dir: &Path, name: &str, dist: &PhotonDist, format: Format) -> Result<()> {
    match format {
        Format::Json => io::write_json(&dir.join(format!("{name}.json")), dist),
        Format::Csv => io::write_text(&dir.join(format!("{name}.csv")), &io::dist_csv(dist)),
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = args.common.config()?;
    let budget = apply_flags(&mut cfg, &args.flags)?;
    let (measured, n_windows, histogram) = match (&args.hist, &args.pprime) {
        (Some(path), _) => {
            let h = io::read_histogram_csv(path)?;
            cfg.run.n_windows = h.n_windows;
            (h.fractions(), Some(h.n_windows), Some(h))
        }
        (None, Some(list)) => (io::parse_inline_probs(list)?, args.common.windows, None),
        (None, None) => {
            return Err(Error::Config("analyze needs --hist or --pprime".into()));
        }
    };
    let report = build_report(&cfg, budget, &measured, n_windows, histogram, None, started)?;
    let dir = out_dir(&cfg);
    io::write_json(&dir.join("report.json"), &report)?;
    write_estimate(dir, "estimate", &report.analysis.estimate, args.format)?;
    print!("{}", report.summary());
    println!("wrote {}", dir.display());
    Ok(())
}

fn fig2_csv(c: &pipeline::WclComparison) -> String {
    let mut out = String::from("j,P_source,P_wcl_mean,P_wcl_p2\n");
    for j in 0..=c.source.n_max() {
        out.push_str(&format!(
            "{j},{},{},{}\n",
            io::fmt17(c.source.get(j)),
            io::fmt17(c.same_mean.get(j)),
            io::fmt17(c.same_p2.get(j))
        ));
    }
    out
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let dist = match (&args.dist, &args.probs) {
        (Some(p), _) => io::read_dist(p)?,
        (None, Some(list)) => io::parse_inline_probs(list)?,
        (None, None) => return Err(Error::Config("compare needs --dist or --probs".into())),
    };
    let cmp = pipeline::compare_wcl(&dist)?;
    print!("{}", cmp.table());
    if let Some(dir) = &args.out {
        io::write_text(&dir.join("fig2.csv"), &fig2_csv(&cmp))?;
        io::write_json(&dir.join("compare.json"), &cmp)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let grid = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad grid value '{s}': {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    Ok(grid)
}

/// Rows of (value, mean control, P(0), P(1), P(2), vacuum-gate probability).
fn sweep_rows(cfg: &RunConfig, param: SweepParam, grid: &[f64], mode: SweepMode) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|&v| {
            let mut source = cfg.source.clone();
            match param {
                SweepParam::PairRate => source.pair_rate = v,
                SweepParam::WindowDuration => source.window_duration = v,
                SweepParam::ControlDetEff => source.control_det_eff = v,
            }
            source.validate()?;
            let m = source.mean_control();
            let vacuum = rate_sweep(&[m])?[0].vacuum_gate_prob;
            let (p, vacuum_col) = match mode {
                SweepMode::Analytic => (pipeline::predict_emission(&source, 2)?, vacuum),
                SweepMode::Simulate => {
                    let sim = pipeline::simulate(&source, &cfg.analyzer, cfg.run.n_windows)?;
                    (sim.emitted.fractions(), sim.vacuum_gate_fraction)
                }
            };
            Ok(vec![v, m, p.get(0), p.get(1), p.get(2), vacuum_col])
        })
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.common.config()?;
    let grid = parse_grid(&args.grid)?;
    let rows = sweep_rows(&cfg, args.param, &grid, args.mode)?;
    let name = serde_json::to_value(args.param)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let header = [name.as_str(), "mean_control", "P0", "P1", "P2", "vacuum_gate_prob"];
    let csv = io::float_table_csv(&header, &rows);
    let dir = out_dir(&cfg);
    io::write_text(&dir.join("sweep.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

#[derive(Serialize)]
struct ReferenceAnalyses {
    /// Reference fractions treated as already corrected: loss inversion only.
    as_corrected: Report,
    /// Reference fractions treated as raw: the configured corrections first, if they succeed.
    as_raw: std::result::Result<Report, String>,
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = args.common.config()?;
    if let Some(s) = args.samples {
        cfg.analysis.n_uncertainty_samples = s;
        cfg.validate()?;
    }
    let dir = out_dir(&cfg).to_path_buf();

    let sim = pipeline::simulate(&cfg.source, &cfg.analyzer, cfg.run.n_windows)?;
    let header = HistogramHeader {
        n_windows: sim.n_windows,
        source: &cfg.source,
        analyzer: &cfg.analyzer,
    };
    io::write_histogram_csv(&dir.join("histogram.csv"), &sim.registered, &header)?;
    let measured = sim.registered.fractions();
    let sim_report = build_report(
        &cfg,
        None,
        &measured,
        Some(sim.n_windows),
        Some(sim.registered.clone()),
        Some(sim.clone()),
        started,
    )?;
    io::write_json(&dir.join("report_simulated.json"), &sim_report)?;

    let reference = PhotonDist::new(REFERENCE_PPRIME.to_vec())?;
    let mut naive_cfg = cfg.clone();
    naive_cfg.analysis.corrections = Corrections::NONE;
    naive_cfg.analysis.n_max = Some(2);
    let as_corrected = build_report(
        &naive_cfg,
        None,
        &reference,
        Some(REFERENCE_WINDOWS),
        None,
        None,
        started,
    )?;
    let as_raw =
        build_report(&cfg, None, &reference, Some(REFERENCE_WINDOWS), None, None, started).map_err(|e| e.to_string());
    io::write_json(
        &dir.join("report_reference.json"),
        &ReferenceAnalyses {
            as_corrected: as_corrected.clone(),
            as_raw: as_raw.clone(),
        },
    )?;

    let cmp = pipeline::compare_wcl(&PhotonDist::new(REFERENCE_DIST.to_vec())?)?;
    io::write_text(&dir.join("fig2.csv"), &fig2_csv(&cmp))?;
    let grid: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0].to_vec();
    let rate_rows: Vec<Vec<f64>> = rate_sweep(&grid)?
        .iter()
        .map(|r| vec![r.mean_control, r.vacuum_gate_prob])
        .collect();
    io::write_text(
        &dir.join("rate_sweep.csv"),
        &io::float_table_csv(&["mean_control", "vacuum_gate_prob"], &rate_rows),
    )?;

    println!(
        "== simulated run ({} windows, seed {}) ==",
        sim.n_windows, cfg.source.master_seed
    );
    println!(
        "mean control detections {:.4}; vacuum-gate fraction {:.3e} (analytic {:.3e})",
        sim.mean_control,
        sim.vacuum_gate_fraction,
        cfg.source.vacuum_gate_prob()
    );
    let truth = sim.emitted.fractions();
    println!(
        "true emission: P(0) = {:.5}, P(1) = {:.5}, P(2) = {:.5}",
        truth.get(0),
        truth.get(1),
        truth.get(2)
    );
    print!("{}", sim_report.summary());
    println!("\n== reference fractions, inversion only ==");
    print!("{}", as_corrected.summary());
    println!("\n== reference fractions, corrections {} ==", cfg.analysis.corrections);
    match &as_raw {
        Ok(r) => print!("{}", r.summary()),
        Err(e) => println!("correction failed: {e}"),
    }
    println!("\n== reference distribution vs weak coherent light ==");
    print!("{}", cmp.table());
    println!("wrote {}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
