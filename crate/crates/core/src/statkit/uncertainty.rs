//! Monte Carlo propagation of efficiency and counting uncertainty through the inversion.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamTag};
use crate::statkit::{invert_loss, EfficiencyBudget, PhotonDist};

pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyOptions {
    pub n_samples: usize,
    /// Windows behind the measured fractions; enables multinomial resampling.
    pub n_windows: Option<u64>,
    pub n_max: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyResult {
    /// Inversion at the nominal efficiency, no resampling.
    pub point: PhotonDist,
    /// Per-entry sample mean, with the sample standard deviation as sigma.
    pub sampled: PhotonDist,
    /// Samples whose inversion produced negative mass and were dropped.
    pub rejected: usize,
}

fn truncated_normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidArgument(format!("efficiency distribution: {e}")))?;
    for _ in 0..10_000 {
        let x = normal.sample(rng);
        if x > 0.0 && x <= 1.0 {
            return Ok(x);
        }
    }
    Err(Error::InvalidArgument(format!(
        "efficiency N({mean}, {sd}) has negligible mass inside (0, 1]"
    )))
}

/// Multinomial resample of `n` windows; the mass missing from `p` is a hidden category.
fn resample<R: Rng>(rng: &mut R, p: &PhotonDist, n: u64) -> PhotonDist {
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    let probs = p
        .probs()
        .iter()
        .map(|&q| {
            let k = if remaining_n == 0 || remaining_p <= 0.0 {
                0
            } else {
                let frac = (q / remaining_p).clamp(0.0, 1.0);
                Binomial::new(remaining_n, frac).expect("valid binomial").sample(rng)
            };
            remaining_n -= k;
            remaining_p -= q;
            k as f64 / n as f64
        })
        .collect();
    PhotonDist::unchecked(probs)
}

/// Propagates the efficiency uncertainty (and, when `n_windows` is given, the counting
/// error of the measured fractions) through [`invert_loss`].
///
/// Each sample draws η from a normal truncated to (0, 1], inverts, and contributes to
/// the per-entry mean and standard deviation. Sample `s` uses its own stream keyed by
/// `(seed, s)`, so the result does not depend on thread count.
pub fn propagate_eta_uncertainty(
    p_prime: &PhotonDist,
    budget: &EfficiencyBudget,
    opts: UncertaintyOptions,
) -> Result<UncertaintyResult> {
    if opts.n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} uncertainty samples, got {}",
            opts.n_samples
        )));
    }
    let eta = budget.effective;
    let point = invert_loss(p_prime, eta, opts.n_max)?;
    let sd = budget.effective_sigma;
    if sd == 0.0 && opts.n_windows.is_none() {
        let zeros = vec![0.0; point.probs().len()];
        return Ok(UncertaintyResult {
            sampled: point.clone().with_sigma(zeros)?,
            point,
            rejected: 0,
        });
    }

    let samples: Vec<Option<PhotonDist>> = (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|s| -> Result<Option<PhotonDist>> {
            let mut rng = rng::stream(opts.seed, s, StreamTag::Uncertainty);
            let eta_s = if sd > 0.0 {
                truncated_normal(&mut rng, eta, sd)?
            } else {
                eta
            };
            let observed = match opts.n_windows {
                Some(n) => resample(&mut rng, p_prime, n),
                None => p_prime.clone(),
            };
            match invert_loss(&observed, eta_s, opts.n_max) {
                Ok(d) => Ok(Some(d)),
                Err(Error::NegativeMass { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let accepted: Vec<&PhotonDist> = samples.iter().flatten().collect();
    let rejected = samples.len() - accepted.len();
    if accepted.len() < 2 {
        return Err(Error::Analysis(format!(
            "{rejected} of {} uncertainty samples produced negative mass",
            samples.len()
        )));
    }
    let len = opts.n_max + 1;
    let count = accepted.len() as f64;
    let mean: Vec<f64> = (0..len)
        .map(|j| accepted.iter().map(|d| d.get(j)).sum::<f64>() / count)
        .collect();
    let sigma: Vec<f64> = (0..len)
        .map(|j| {
            let ss: f64 = accepted.iter().map(|d| (d.get(j) - mean[j]).powi(2)).sum();
            (ss / (count - 1.0)).sqrt()
        })
        .collect();
    Ok(UncertaintyResult {
        point,
        sampled: PhotonDist::unchecked(mean).with_sigma(sigma)?,
        rejected,
    })
}
