//! C ABI for the gspdc simulator and photon-counting statistics.
//!
//! Every fallible function returns a [`GspdcStatus`]; on failure a message is
//! available from [`gspdc_last_error`] on the same thread. Configurations, simulations,
//! histograms and reports are opaque handles released with the matching `*_free`
//! function. Distributions cross the boundary as `double` arrays indexed by
//! photon number.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use gspdc::pipeline::{self, AnalysisSettings, SimulationOutcome};
use gspdc::report::{Provenance, Report, VacuumGate};
use gspdc::statkit::{self, EfficiencyBudget, EfficiencyStage, PhotonDist, UncertaintyOptions};
use gspdc::{CountHistogram, Error, RunConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspdcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    NegativeMass = 6,
    Analysis = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A run configuration: source, analyzer, analysis and run settings.
pub struct GspdcConfig(RunConfig);

/// A per-window count tally.
pub struct GspdcHistogram(CountHistogram);

/// Result of simulating source and analyzer together.
pub struct GspdcSimulation(SimulationOutcome);

/// Result of correcting and inverting measured count fractions.
pub struct GspdcReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> GspdcStatus {
    match e {
        Error::Config(_) => GspdcStatus::Config,
        Error::InvalidArgument(_) => GspdcStatus::InvalidArgument,
        Error::NegativeMass { .. } => GspdcStatus::NegativeMass,
        Error::Analysis(_) => GspdcStatus::Analysis,
        Error::Io { .. } => GspdcStatus::Io,
        Error::Parse { .. } => GspdcStatus::Parse,
    }
}

struct Failure(GspdcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GspdcStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(GspdcStatus::InvalidArgument, message.into())
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GspdcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GspdcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GspdcStatus::Panic
        }
    }
}

unsafe fn input<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Err(invalid(format!("{what} is empty")));
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn output<'a>(data: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    if len < needed {
        return Err(Failure(
            GspdcStatus::BufferTooSmall,
            format!("{what} holds {len} values, {needed} needed"),
        ));
    }
    Ok(slice::from_raw_parts_mut(data, len))
}

unsafe fn dist(data: *const f64, len: usize) -> Result<PhotonDist, Failure> {
    Ok(PhotonDist::new(input(data, len, "distribution")?.to_vec())?)
}

unsafe fn write_dist(d: &PhotonDist, out: *mut f64, out_len: usize) -> Result<(), Failure> {
    let buf = output(out, out_len, d.probs().len(), "output buffer")?;
    buf[..d.probs().len()].copy_from_slice(d.probs());
    buf[d.probs().len()..].fill(0.0);
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. Valid until the next call.
#[no_mangle]
pub extern "C" fn gspdc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gspdc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gspdc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- configuration

/// The bundled reference preset.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_preset(out: *mut *mut GspdcConfig) -> GspdcStatus {
    guard(|| put(out, Box::into_raw(Box::new(GspdcConfig(RunConfig::reference_preset())))))
}

/// Parses a TOML configuration. Missing sections take default values.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_from_toml(toml: *const c_char, out: *mut *mut GspdcConfig) -> GspdcStatus {
    guard(|| {
        let cfg = RunConfig::from_toml_str(c_str(toml, "toml")?)?;
        put(out, Box::into_raw(Box::new(GspdcConfig(cfg))))
    })
}

/// Loads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_load(path: *const c_char, out: *mut *mut GspdcConfig) -> GspdcStatus {
    guard(|| {
        let cfg = RunConfig::load(Path::new(c_str(path, "path")?))?;
        put(out, Box::into_raw(Box::new(GspdcConfig(cfg))))
    })
}

/// The configuration as TOML; free with [`gspdc_string_free`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_to_toml(cfg: *const GspdcConfig, out: *mut *mut c_char) -> GspdcStatus {
    guard(|| {
        let text = handle(cfg, "config")?.0.to_toml_string();
        put(out, CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_set_seed(cfg: *mut GspdcConfig, seed: u64) -> GspdcStatus {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("config"))?.0.source.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_set_windows(cfg: *mut GspdcConfig, n_windows: u64) -> GspdcStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("config"))?;
        let mut next = c.0.clone();
        next.run.n_windows = n_windows;
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Number of Monte Carlo samples for uncertainty propagation; 0 disables it.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_set_uncertainty_samples(cfg: *mut GspdcConfig, n: usize) -> GspdcStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("config"))?;
        let mut next = c.0.clone();
        next.analysis.n_uncertainty_samples = n;
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// Corrections applied before inversion, as text: `none`, `dark`, `deadtime` or
/// `dark,deadtime`.
///
/// # Safety
/// `cfg` must be a live handle and `corrections` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_set_corrections(
    cfg: *mut GspdcConfig,
    corrections: *const c_char,
) -> GspdcStatus {
    guard(|| {
        let parsed = c_str(corrections, "corrections")?.parse()?;
        cfg.as_mut().ok_or_else(|| null("config"))?.0.analysis.corrections = parsed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_config_free(cfg: *mut GspdcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

// ------------------------------------------------------------------ simulation

/// Simulates `n_windows` windows of the configured source and analyzer
/// (0 uses the configured count).
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulate(
    cfg: *const GspdcConfig,
    n_windows: u64,
    out: *mut *mut GspdcSimulation,
) -> GspdcStatus {
    guard(|| {
        let c = &handle(cfg, "config")?.0;
        let n = if n_windows == 0 { c.run.n_windows } else { n_windows };
        let sim = pipeline::simulate(&c.source, &c.analyzer, n)?;
        put(out, Box::into_raw(Box::new(GspdcSimulation(sim))))
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulation_mean_control(sim: *const GspdcSimulation, out: *mut f64) -> GspdcStatus {
    guard(|| put(out, handle(sim, "simulation")?.0.mean_control))
}

/// Fraction of windows without any control detection.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulation_vacuum_gate_fraction(
    sim: *const GspdcSimulation,
    out: *mut f64,
) -> GspdcStatus {
    guard(|| put(out, handle(sim, "simulation")?.0.vacuum_gate_fraction))
}

/// Copy of the registered-count histogram (the simulated P′).
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulation_registered(
    sim: *const GspdcSimulation,
    out: *mut *mut GspdcHistogram,
) -> GspdcStatus {
    guard(|| {
        let h = handle(sim, "simulation")?.0.registered.clone();
        put(out, Box::into_raw(Box::new(GspdcHistogram(h))))
    })
}

/// Copy of the emitted-photon histogram (the true P).
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulation_emitted(
    sim: *const GspdcSimulation,
    out: *mut *mut GspdcHistogram,
) -> GspdcStatus {
    guard(|| {
        let h = handle(sim, "simulation")?.0.emitted.clone();
        put(out, Box::into_raw(Box::new(GspdcHistogram(h))))
    })
}

/// # Safety
/// `sim` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_simulation_free(sim: *mut GspdcSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

// ------------------------------------------------------------------- histograms

/// Builds a histogram from `len` per-window counts.
///
/// # Safety
/// `counts` must point to `len` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_from_counts(
    counts: *const u64,
    len: usize,
    out: *mut *mut GspdcHistogram,
) -> GspdcStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let values: Vec<usize> = slice::from_raw_parts(counts, len).iter().map(|&c| c as usize).collect();
        let h = gspdc::analyzer::build_histogram(&values)?;
        put(out, Box::into_raw(Box::new(GspdcHistogram(h))))
    })
}

/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_n_windows(h: *const GspdcHistogram, out: *mut u64) -> GspdcStatus {
    guard(|| put(out, handle(h, "histogram")?.0.n_windows))
}

/// Highest count observed in any window.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_max_count(h: *const GspdcHistogram, out: *mut usize) -> GspdcStatus {
    guard(|| put(out, handle(h, "histogram")?.0.max_count()))
}

/// Number of windows with exactly `i` counts.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_count(h: *const GspdcHistogram, i: usize, out: *mut u64) -> GspdcStatus {
    guard(|| put(out, handle(h, "histogram")?.0.count(i)))
}

/// Writes fractions for counts 0..=max_count into `out` and zero-fills the rest.
///
/// # Safety
/// `h` must be a live handle and `out` point to `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_fractions(
    h: *const GspdcHistogram,
    out: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| write_dist(&handle(h, "histogram")?.0.fractions(), out, out_len))
}

/// # Safety
/// `h` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_histogram_free(h: *mut GspdcHistogram) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// --------------------------------------------------------------------- analysis

/// Corrects, inverts and diagnoses measured count fractions using the analysis
/// settings of `cfg`. `n_windows` is the number of windows behind the fractions, or 0
/// if unknown. When dead-time correction is on and no merge probability is
/// configured, it is calibrated by simulation.
///
/// # Safety
/// `cfg` must be a live handle, `p_prime` point to `len` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn gspdc_analyze(
    cfg: *const GspdcConfig,
    p_prime: *const f64,
    len: usize,
    n_windows: u64,
    out: *mut *mut GspdcReport,
) -> GspdcStatus {
    guard(|| {
        let c = &handle(cfg, "config")?.0;
        let measured = dist(p_prime, len)?;
        let (merge_prob, calibration) = pipeline::resolve_merge_prob(c)?;
        let settings = AnalysisSettings::from_config(c, merge_prob);
        let windows = (n_windows > 0).then_some(n_windows);
        let analysis = pipeline::analyze(&measured, windows, &settings)?;
        let report = Report {
            config: Some(c.clone()),
            settings,
            histogram: None,
            merge_calibration: calibration,
            simulation: None,
            analysis,
            vacuum_gate: Some(VacuumGate {
                analytic: c.source.vacuum_gate_prob(),
                simulated: None,
            }),
            provenance: Provenance::new(c.source.master_seed, 0.0),
        };
        put(out, Box::into_raw(Box::new(GspdcReport(report))))
    })
}

/// Length of the estimated distribution, n_max + 1.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_report_len(r: *const GspdcReport, out: *mut usize) -> GspdcStatus {
    guard(|| put(out, handle(r, "report")?.0.analysis.estimate.probs().len()))
}

/// Copies the estimate into `probs` and, when `sigma` is not NULL, its standard
/// deviations (zero when uncertainty sampling was off).
///
/// # Safety
/// `r` must be a live handle; `probs` (and `sigma`, if given) must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gspdc_report_estimate(
    r: *const GspdcReport,
    probs: *mut f64,
    sigma: *mut f64,
    len: usize,
) -> GspdcStatus {
    guard(|| {
        let est = &handle(r, "report")?.0.analysis.estimate;
        write_dist(est, probs, len)?;
        if !sigma.is_null() {
            let buf = output(sigma, len, est.probs().len(), "sigma buffer")?;
            buf.fill(0.0);
            if let Some(s) = est.sigma() {
                buf[..s.len()].copy_from_slice(s);
            }
        }
        Ok(())
    })
}

/// Mean photon number, Fano factor and g2(0) of the estimate. Undefined moments
/// (vacuum) are reported as NaN.
///
/// # Safety
/// `r` must be a live handle; output pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_report_diagnostics(
    r: *const GspdcReport,
    mean: *mut f64,
    fano: *mut f64,
    g2_zero: *mut f64,
) -> GspdcStatus {
    guard(|| {
        let d = handle(r, "report")?.0.analysis.diagnostics;
        if !mean.is_null() {
            *mean = d.mean;
        }
        if !fano.is_null() {
            *fano = d.fano.unwrap_or(f64::NAN);
        }
        if !g2_zero.is_null() {
            *g2_zero = d.g2_zero.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// The full report as JSON with wall-clock time zeroed; free with [`gspdc_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gspdc_report_json(r: *const GspdcReport, out: *mut *mut c_char) -> GspdcStatus {
    guard(|| {
        let text = handle(r, "report")?.0.numerical_json();
        put(out, CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw())
    })
}

/// # Safety
/// `r` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_report_free(r: *mut GspdcReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// ---------------------------------------------------------------- array toolkit

/// Overall efficiency of `n` stages and its propagated uncertainty.
///
/// # Safety
/// `efficiency` and `sigma` must point to `n` values (`sigma` may be NULL for none);
/// outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn gspdc_budget_effective(
    efficiency: *const f64,
    sigma: *const f64,
    n: usize,
    effective: *mut f64,
    effective_sigma: *mut f64,
) -> GspdcStatus {
    guard(|| {
        let eff = input(efficiency, n, "efficiency")?;
        let sig: Vec<f64> = if sigma.is_null() {
            vec![0.0; n]
        } else {
            slice::from_raw_parts(sigma, n).to_vec()
        };
        let stages: Vec<EfficiencyStage> = eff
            .iter()
            .zip(&sig)
            .enumerate()
            .map(|(i, (&e, &s))| EfficiencyStage::new(&format!("stage{i}"), e, s))
            .collect();
        let b = statkit::budget_effective(&stages);
        put(effective, b.effective)?;
        if !effective_sigma.is_null() {
            *effective_sigma = b.effective_sigma;
        }
        Ok(())
    })
}

/// Binomial loss channel: `out[i] = Σ_j C(j,i) η^i (1−η)^(j−i) p[j]`, length `len`.
///
/// # Safety
/// `p` must hold `len` values and `out` at least `len`.
#[no_mangle]
pub unsafe extern "C" fn gspdc_forward_loss(
    p: *const f64,
    len: usize,
    eta: f64,
    out: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| write_dist(&statkit::forward_loss(&dist(p, len)?, eta)?, out, out_len))
}

/// Inverts the loss channel; writes `n_max + 1` values.
///
/// # Safety
/// `p_prime` must hold `len` values and `out` at least `n_max + 1`.
#[no_mangle]
pub unsafe extern "C" fn gspdc_invert_loss(
    p_prime: *const f64,
    len: usize,
    eta: f64,
    n_max: usize,
    out: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| write_dist(&statkit::invert_loss(&dist(p_prime, len)?, eta, n_max)?, out, out_len))
}

/// Removes Poisson dark counts of mean `dark_mean`; writes `len` values.
///
/// # Safety
/// `p_prime` must hold `len` values and `out` at least `len`.
#[no_mangle]
pub unsafe extern "C" fn gspdc_dark_correct(
    p_prime: *const f64,
    len: usize,
    dark_mean: f64,
    out: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| write_dist(&statkit::dark_correct(&dist(p_prime, len)?, dark_mean)?, out, out_len))
}

/// Undoes dead-time merging of two-count windows; writes `len` values.
///
/// # Safety
/// `p_prime` must hold `len` values and `out` at least `len`.
#[no_mangle]
pub unsafe extern "C" fn gspdc_deadtime_correct(
    p_prime: *const f64,
    len: usize,
    merge_prob: f64,
    out: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| {
        write_dist(
            &statkit::deadtime_correct(&dist(p_prime, len)?, merge_prob)?,
            out,
            out_len,
        )
    })
}

/// Mean, Fano factor and g2(0); undefined moments (vacuum) come back as NaN.
///
/// # Safety
/// `p` must hold `len` values; output pointers must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn gspdc_moments(
    p: *const f64,
    len: usize,
    mean: *mut f64,
    fano: *mut f64,
    g2_zero: *mut f64,
) -> GspdcStatus {
    guard(|| {
        let d = statkit::Diagnostics::of(&dist(p, len)?);
        if !mean.is_null() {
            *mean = d.mean;
        }
        if !fano.is_null() {
            *fano = d.fano.unwrap_or(f64::NAN);
        }
        if !g2_zero.is_null() {
            *g2_zero = d.g2_zero.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Coherent-light means matching `p` by ⟨n⟩ and by P(2).
///
/// # Safety
/// `p` must hold `len` values; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn gspdc_match_wcl(
    p: *const f64,
    len: usize,
    mu_same_mean: *mut f64,
    mu_same_p2: *mut f64,
) -> GspdcStatus {
    guard(|| {
        let c = pipeline::compare_wcl(&dist(p, len)?)?;
        put(mu_same_mean, c.mu_same_mean)?;
        put(mu_same_p2, c.mu_same_p2)
    })
}

/// Monte Carlo uncertainty of the inversion under efficiency `eta ± eta_sigma` and,
/// when `n_windows > 0`, multinomial counting error. Writes `n_max + 1` means and
/// standard deviations.
///
/// # Safety
/// `p_prime` must hold `len` values; `mean` and `sigma` at least `n_max + 1`.
#[no_mangle]
pub unsafe extern "C" fn gspdc_propagate_uncertainty(
    p_prime: *const f64,
    len: usize,
    eta: f64,
    eta_sigma: f64,
    n_windows: u64,
    n_max: usize,
    n_samples: usize,
    seed: u64,
    mean: *mut f64,
    sigma: *mut f64,
    out_len: usize,
) -> GspdcStatus {
    guard(|| {
        let r = statkit::propagate_eta_uncertainty(
            &dist(p_prime, len)?,
            &EfficiencyBudget::lumped(eta, eta_sigma),
            UncertaintyOptions {
                n_samples,
                n_windows: (n_windows > 0).then_some(n_windows),
                n_max,
                seed,
            },
        )?;
        write_dist(&r.sampled, mean, out_len)?;
        let s = r.sampled.sigma().expect("sampled result carries sigma");
        let buf = output(sigma, out_len, s.len(), "sigma buffer")?;
        buf.fill(0.0);
        buf[..s.len()].copy_from_slice(s);
        Ok(())
    })
}
