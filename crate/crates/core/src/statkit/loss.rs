//! Binomial loss channel: a photon survives detection independently with probability η.
//!
//! ```text
//! P'(i) = Σ_{j ≥ i} C(j, i) η^i (1 − η)^(j − i) P(j)
//! ```
//!
//! The channel matrix is upper triangular, so on a truncation j ≤ n_max it is inverted
//! exactly by back-substitution from the top entry down.

use crate::error::{Error, Result};
use crate::statkit::PhotonDist;
use crate::tolerances::Tolerances;

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

/// C(n, k) p^k (1 − p)^(n − k), with 0^0 = 1.
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    binomial_coefficient(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "efficiency must lie in [0, 1], got {eta}"
        )))
    }
}

/// Count distribution after independent per-photon loss with survival `eta`.
pub fn forward_loss(p: &PhotonDist, eta: f64) -> Result<PhotonDist> {
    check_eta(eta)?;
    let n_max = p.n_max();
    let probs = (0..=n_max)
        .map(|i| (i..=n_max).map(|j| binomial_pmf(j, i, eta) * p.get(j)).sum())
        .collect();
    Ok(PhotonDist::unchecked(probs))
}

/// Recovers the photon-number distribution from measured count fractions.
///
/// Solves the loss channel restricted to `0..=n_max`. Negative results within the
/// default tolerance are clipped to zero; larger ones mean the data are inconsistent
/// with the model (or `n_max` is too small) and are returned as
/// [`Error::NegativeMass`].
pub fn invert_loss(p_prime: &PhotonDist, eta: f64, n_max: usize) -> Result<PhotonDist> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let observed = p_prime.resized(n_max)?;
    let loss = 1.0 - eta;
    let mut probs = vec![0.0; n_max + 1];
    for j in (0..=n_max).rev() {
        let feed_down: f64 = (j + 1..=n_max)
            .map(|k| binomial_coefficient(k, j) * loss.powi((k - j) as i32) * probs[k])
            .sum();
        probs[j] = observed.get(j) / eta.powi(j as i32) - feed_down;
    }
    PhotonDist::unchecked(probs).clip_negative(Tolerances::DEFAULT.negative_mass)
}
