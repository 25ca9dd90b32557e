//! Weak coherent light: Poisson photon statistics and mean matching.

use crate::error::{Error, Result};
use crate::statkit::{mean_photon, PhotonDist};
use crate::tolerances::Tolerances;

/// e^{−μ} μ^n / n!
pub fn poisson_pmf(mu: f64, n: usize) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (1..=n).fold((-mu).exp(), |p, k| p * mu / k as f64)
}

/// Poisson(μ) truncated at `n_max`; the tail beyond is left as the distribution's remainder.
pub fn poisson_dist(mu: f64, n_max: usize) -> Result<PhotonDist> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Poisson mean must be non-negative, got {mu}"
        )));
    }
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut term = (-mu).exp();
    for n in 0..=n_max {
        if n > 0 {
            term *= mu / n as f64;
        }
        probs.push(term);
    }
    Ok(PhotonDist::unchecked(probs))
}

/// Coherent-state mean with the same ⟨n⟩ as `p`.
pub fn match_wcl_by_mean(p: &PhotonDist) -> f64 {
    mean_photon(p)
}

fn two_photon(mu: f64) -> f64 {
    (-mu).exp() * mu * mu / 2.0
}

/// Smaller coherent-state mean whose two-photon probability equals `target_p2`.
///
/// P(2) = e^{−μ} μ² / 2 rises on (0, 2) to its maximum 2e^{−2}; the root is found by
/// bisection on that interval.
pub fn match_wcl_by_p2(target_p2: f64) -> Result<f64> {
    let peak = two_photon(2.0);
    if !(0.0..=peak).contains(&target_p2) {
        return Err(Error::InvalidArgument(format!(
            "P(2) = {target_p2} is unreachable by coherent light (maximum {peak})"
        )));
    }
    if target_p2 == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > Tolerances::DEFAULT.bisection {
        let mid = 0.5 * (lo + hi);
        if two_photon(mid) < target_p2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
