//! Corrections applied to measured count fractions before loss inversion.

use crate::error::{Error, Result};
use crate::statkit::{poisson_pmf, PhotonDist};
use crate::tolerances::Tolerances;

/// Distribution of `X + D` with `D ~ Poisson(dark_mean)` independent, on the same truncation.
pub fn poisson_convolve(p: &PhotonDist, dark_mean: f64) -> Result<PhotonDist> {
    if !(dark_mean >= 0.0 && dark_mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dark mean must be non-negative, got {dark_mean}"
        )));
    }
    let n_max = p.n_max();
    let kernel: Vec<f64> = (0..=n_max).map(|k| poisson_pmf(dark_mean, k)).collect();
    let probs = (0..=n_max)
        .map(|n| (0..=n).map(|k| p.get(k) * kernel[n - k]).sum())
        .collect();
    Ok(PhotonDist::unchecked(probs))
}

/// Removes additive Poisson dark counts with mean `dark_mean` per window.
///
/// Convolution with a Poisson kernel is lower triangular on counts, so the truncated
/// system is solved exactly by forward substitution.
pub fn dark_correct(p_prime: &PhotonDist, dark_mean: f64) -> Result<PhotonDist> {
    if !(dark_mean >= 0.0 && dark_mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dark mean must be non-negative, got {dark_mean}"
        )));
    }
    if dark_mean == 0.0 {
        return Ok(p_prime.clone().without_sigma());
    }
    let n_max = p_prime.n_max();
    // kernel[k] / kernel[0] = d^k / k!
    let ratio: Vec<f64> = (0..=n_max)
        .scan(1.0, |term, k| {
            if k > 0 {
                *term *= dark_mean / k as f64;
            }
            Some(*term)
        })
        .collect();
    let lead = dark_mean.exp();
    let mut probs = vec![0.0; n_max + 1];
    for n in 0..=n_max {
        let spill: f64 = (0..n).map(|k| probs[k] * ratio[n - k]).sum();
        probs[n] = p_prime.get(n) * lead - spill;
    }
    PhotonDist::unchecked(probs).clip_negative(Tolerances::DEFAULT.negative_mass)
}

/// Forward dead-time merge channel on counts ≤ 2: a window with two true counts shows
/// one with probability `merge_prob`. Entries above 2 pass through.
pub fn merge_channel(p: &PhotonDist, merge_prob: f64) -> Result<PhotonDist> {
    check_merge(merge_prob)?;
    let mut probs = p.probs().to_vec();
    if probs.len() > 2 {
        let moved = merge_prob * probs[2];
        probs[1] += moved;
        probs[2] -= moved;
    }
    Ok(PhotonDist::unchecked(probs))
}

fn check_merge(merge_prob: f64) -> Result<()> {
    if (0.0..=1.0).contains(&merge_prob) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "merge probability must lie in [0, 1], got {merge_prob}"
        )))
    }
}

/// Inverts [`merge_channel`]: restores two-count windows lost to counter dead time.
pub fn deadtime_correct(p_prime: &PhotonDist, merge_prob: f64) -> Result<PhotonDist> {
    check_merge(merge_prob)?;
    let mut probs = p_prime.probs().to_vec();
    if probs.len() > 2 {
        let observed_two = probs[2];
        let kept = 1.0 - merge_prob;
        if kept == 0.0 {
            if observed_two != 0.0 {
                return Err(Error::Analysis(
                    "merge probability 1 leaves no two-count windows, yet two counts were observed".into(),
                ));
            }
        } else {
            let true_two = observed_two / kept;
            probs[1] -= true_two - observed_two;
            probs[2] = true_two;
        }
    }
    PhotonDist::unchecked(probs).clip_negative(Tolerances::DEFAULT.negative_mass)
}
