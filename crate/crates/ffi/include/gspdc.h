#ifndef GSPDC_H
#define GSPDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GspdcStatus {
  GSPDC_STATUS_OK = 0,
  GSPDC_STATUS_NULL_POINTER = 1,
  GSPDC_STATUS_INVALID_ARGUMENT = 2,
  GSPDC_STATUS_CONFIG = 3,
  GSPDC_STATUS_IO = 4,
  GSPDC_STATUS_PARSE = 5,
  GSPDC_STATUS_NEGATIVE_MASS = 6,
  GSPDC_STATUS_ANALYSIS = 7,
  GSPDC_STATUS_BUFFER_TOO_SMALL = 8,
  GSPDC_STATUS_PANIC = 9,
} GspdcStatus;

// A run configuration: source, analyzer, analysis and run settings.
typedef struct GspdcConfig GspdcConfig;

// A per-window count tally.
typedef struct GspdcHistogram GspdcHistogram;

// Result of correcting and inverting measured count fractions.
typedef struct GspdcReport GspdcReport;

// Result of simulating source and analyzer together.
typedef struct GspdcSimulation GspdcSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the next call.
const char *gspdc_last_error(void);

// Library version as a static NUL-terminated string.
const char *gspdc_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed.
void gspdc_string_free(char *s);

// The bundled reference preset.
//
// # Safety
// `out` must be a valid pointer.
enum GspdcStatus gspdc_config_preset(struct GspdcConfig **out);

// Parses a TOML configuration. Missing sections take default values.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum GspdcStatus gspdc_config_from_toml(const char *toml, struct GspdcConfig **out);

// Loads a TOML configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum GspdcStatus gspdc_config_load(const char *path, struct GspdcConfig **out);

// The configuration as TOML; free with [`gspdc_string_free`].
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_config_to_toml(const struct GspdcConfig *cfg, char **out);

// # Safety
// `cfg` must be a live handle.
enum GspdcStatus gspdc_config_set_seed(struct GspdcConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live handle.
enum GspdcStatus gspdc_config_set_windows(struct GspdcConfig *cfg, uint64_t n_windows);

// Number of Monte Carlo samples for uncertainty propagation; 0 disables it.
//
// # Safety
// `cfg` must be a live handle.
enum GspdcStatus gspdc_config_set_uncertainty_samples(struct GspdcConfig *cfg, uintptr_t n);

// Corrections applied before inversion, as text: `none`, `dark`, `deadtime` or
// `dark,deadtime`.
//
// # Safety
// `cfg` must be a live handle and `corrections` a NUL-terminated string.
enum GspdcStatus gspdc_config_set_corrections(struct GspdcConfig *cfg, const char *corrections);

// # Safety
// `cfg` must be a handle from this library, or NULL.
void gspdc_config_free(struct GspdcConfig *cfg);

// Simulates `n_windows` windows of the configured source and analyzer
// (0 uses the configured count).
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_simulate(const struct GspdcConfig *cfg,
                                uint64_t n_windows,
                                struct GspdcSimulation **out);

// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_simulation_mean_control(const struct GspdcSimulation *sim, double *out);

// Fraction of windows without any control detection.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_simulation_vacuum_gate_fraction(const struct GspdcSimulation *sim,
                                                       double *out);

// Copy of the registered-count histogram (the simulated P′).
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_simulation_registered(const struct GspdcSimulation *sim,
                                             struct GspdcHistogram **out);

// Copy of the emitted-photon histogram (the true P).
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_simulation_emitted(const struct GspdcSimulation *sim,
                                          struct GspdcHistogram **out);

// # Safety
// `sim` must be a handle from this library, or NULL.
void gspdc_simulation_free(struct GspdcSimulation *sim);

// Builds a histogram from `len` per-window counts.
//
// # Safety
// `counts` must point to `len` values and `out` be a valid pointer.
enum GspdcStatus gspdc_histogram_from_counts(const uint64_t *counts,
                                             uintptr_t len,
                                             struct GspdcHistogram **out);

// # Safety
// `h` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_histogram_n_windows(const struct GspdcHistogram *h, uint64_t *out);

// Highest count observed in any window.
//
// # Safety
// `h` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_histogram_max_count(const struct GspdcHistogram *h, uintptr_t *out);

// Number of windows with exactly `i` counts.
//
// # Safety
// `h` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_histogram_count(const struct GspdcHistogram *h, uintptr_t i, uint64_t *out);

// Writes fractions for counts 0..=max_count into `out` and zero-fills the rest.
//
// # Safety
// `h` must be a live handle and `out` point to `out_len` writable values.
enum GspdcStatus gspdc_histogram_fractions(const struct GspdcHistogram *h,
                                           double *out,
                                           uintptr_t out_len);

// # Safety
// `h` must be a handle from this library, or NULL.
void gspdc_histogram_free(struct GspdcHistogram *h);

// Corrects, inverts and diagnoses measured count fractions using the analysis
// settings of `cfg`. `n_windows` is the number of windows behind the fractions, or 0
// if unknown. When dead-time correction is on and no merge probability is
// configured, it is calibrated by simulation.
//
// # Safety
// `cfg` must be a live handle, `p_prime` point to `len` values and `out` be valid.
enum GspdcStatus gspdc_analyze(const struct GspdcConfig *cfg,
                               const double *p_prime,
                               uintptr_t len,
                               uint64_t n_windows,
                               struct GspdcReport **out);

// Length of the estimated distribution, n_max + 1.
//
// # Safety
// `r` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_report_len(const struct GspdcReport *r, uintptr_t *out);

// Copies the estimate into `probs` and, when `sigma` is not NULL, its standard
// deviations (zero when uncertainty sampling was off).
//
// # Safety
// `r` must be a live handle; `probs` (and `sigma`, if given) must hold `len` values.
enum GspdcStatus gspdc_report_estimate(const struct GspdcReport *r,
                                       double *probs,
                                       double *sigma,
                                       uintptr_t len);

// Mean photon number, Fano factor and g2(0) of the estimate. Undefined moments
// (vacuum) are reported as NaN.
//
// # Safety
// `r` must be a live handle; output pointers must be valid or NULL.
enum GspdcStatus gspdc_report_diagnostics(const struct GspdcReport *r,
                                          double *mean,
                                          double *fano,
                                          double *g2_zero);

// The full report as JSON with wall-clock time zeroed; free with [`gspdc_string_free`].
//
// # Safety
// `r` must be a live handle and `out` a valid pointer.
enum GspdcStatus gspdc_report_json(const struct GspdcReport *r, char **out);

// # Safety
// `r` must be a handle from this library, or NULL.
void gspdc_report_free(struct GspdcReport *r);

// Overall efficiency of `n` stages and its propagated uncertainty.
//
// # Safety
// `efficiency` and `sigma` must point to `n` values (`sigma` may be NULL for none);
// outputs must be valid.
enum GspdcStatus gspdc_budget_effective(const double *efficiency,
                                        const double *sigma,
                                        uintptr_t n,
                                        double *effective,
                                        double *effective_sigma);

// Binomial loss channel: `out[i] = Σ_j C(j,i) η^i (1−η)^(j−i) p[j]`, length `len`.
//
// # Safety
// `p` must hold `len` values and `out` at least `len`.
enum GspdcStatus gspdc_forward_loss(const double *p,
                                    uintptr_t len,
                                    double eta,
                                    double *out,
                                    uintptr_t out_len);

// Inverts the loss channel; writes `n_max + 1` values.
//
// # Safety
// `p_prime` must hold `len` values and `out` at least `n_max + 1`.
enum GspdcStatus gspdc_invert_loss(const double *p_prime,
                                   uintptr_t len,
                                   double eta,
                                   uintptr_t n_max,
                                   double *out,
                                   uintptr_t out_len);

// Removes Poisson dark counts of mean `dark_mean`; writes `len` values.
//
// # Safety
// `p_prime` must hold `len` values and `out` at least `len`.
enum GspdcStatus gspdc_dark_correct(const double *p_prime,
                                    uintptr_t len,
                                    double dark_mean,
                                    double *out,
                                    uintptr_t out_len);

// Undoes dead-time merging of two-count windows; writes `len` values.
//
// # Safety
// `p_prime` must hold `len` values and `out` at least `len`.
enum GspdcStatus gspdc_deadtime_correct(const double *p_prime,
                                        uintptr_t len,
                                        double merge_prob,
                                        double *out,
                                        uintptr_t out_len);

// Mean, Fano factor and g2(0); undefined moments (vacuum) come back as NaN.
//
// # Safety
// `p` must hold `len` values; output pointers must be valid or NULL.
enum GspdcStatus gspdc_moments(const double *p,
                               uintptr_t len,
                               double *mean,
                               double *fano,
                               double *g2_zero);

// Coherent-light means matching `p` by ⟨n⟩ and by P(2).
//
// # Safety
// `p` must hold `len` values; outputs must be valid.
enum GspdcStatus gspdc_match_wcl(const double *p,
                                 uintptr_t len,
                                 double *mu_same_mean,
                                 double *mu_same_p2);

// Monte Carlo uncertainty of the inversion under efficiency `eta ± eta_sigma` and,
// when `n_windows > 0`, multinomial counting error. Writes `n_max + 1` means and
// standard deviations.
//
// # Safety
// `p_prime` must hold `len` values; `mean` and `sigma` at least `n_max + 1`.
enum GspdcStatus gspdc_propagate_uncertainty(const double *p_prime,
                                             uintptr_t len,
                                             double eta,
                                             double eta_sigma,
                                             uint64_t n_windows,
                                             uintptr_t n_max,
                                             uintptr_t n_samples,
                                             uint64_t seed,
                                             double *mean,
                                             double *sigma,
                                             uintptr_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSPDC_H */
