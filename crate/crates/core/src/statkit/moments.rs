use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statkit::PhotonDist;

/// ⟨n⟩ = Σ n P(n).
pub fn mean_photon(p: &PhotonDist) -> f64 {
    p.probs().iter().enumerate().map(|(n, &q)| n as f64 * q).sum()
}

fn second_factorial(p: &PhotonDist) -> f64 {
    p.probs()
        .iter()
        .enumerate()
        .map(|(n, &q)| (n * n.saturating_sub(1)) as f64 * q)
        .sum()
}

fn nonzero_mean(p: &PhotonDist, what: &str) -> Result<f64> {
    let mean = mean_photon(p);
    if mean > 0.0 {
        Ok(mean)
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} is undefined for zero mean photon number"
        )))
    }
}

/// Fano factor (⟨n²⟩ − ⟨n⟩²) / ⟨n⟩.
pub fn fano(p: &PhotonDist) -> Result<f64> {
    let mean = nonzero_mean(p, "Fano factor")?;
    let second = second_factorial(p) + mean;
    Ok((second - mean * mean) / mean)
}

/// Zero-delay second-order correlation ⟨n(n − 1)⟩ / ⟨n⟩².
pub fn g2_zero(p: &PhotonDist) -> Result<f64> {
    let mean = nonzero_mean(p, "g2(0)")?;
    Ok(second_factorial(p) / (mean * mean))
}

/// Moment summary; `fano` and `g2_zero` are `None` for the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mean: f64,
    pub fano: Option<f64>,
    pub g2_zero: Option<f64>,
}

impl Diagnostics {
    pub fn of(p: &PhotonDist) -> Self {
        Diagnostics {
            mean: mean_photon(p),
            fano: fano(p).ok(),
            g2_zero: g2_zero(p).ok(),
        }
    }

    pub fn is_sub_poissonian(&self) -> bool {
        matches!(self.fano, Some(f) if f < 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statkit::poisson_dist;

    #[test]
    fn number_state() {
        let p = PhotonDist::number_state(1, 2);
        assert_eq!(mean_photon(&p), 1.0);
        assert_eq!(fano(&p).unwrap(), 0.0);
        assert_eq!(g2_zero(&p).unwrap(), 0.0);
    }

    #[test]
    fn poisson_identities() {
        for mu in [0.05, 0.29, 1.0, 4.0] {
            let p = poisson_dist(mu, 60).unwrap();
            assert!((fano(&p).unwrap() - 1.0).abs() < 1e-12);
            assert!((g2_zero(&p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_distribution() {
        let p = PhotonDist::new(vec![0.724, 0.265, 0.011]).unwrap();
        // ⟨n⟩ = 0.287, ⟨n²⟩ = 0.309, ⟨n(n−1)⟩ = 0.022
        assert!((mean_photon(&p) - 0.287).abs() < 1e-15);
        assert!((fano(&p).unwrap() - (0.309 - 0.287f64.powi(2)) / 0.287).abs() < 1e-14);
        assert!((g2_zero(&p).unwrap() - 0.022 / 0.287f64.powi(2)).abs() < 1e-14);
        assert!(Diagnostics::of(&p).is_sub_poissonian());
    }

    #[test]
    fn vacuum_undefined() {
        let v = PhotonDist::number_state(0, 2);
        assert!(fano(&v).is_err());
        assert!(g2_zero(&v).is_err());
        let d = Diagnostics::of(&v);
        assert_eq!((d.mean, d.fano, d.g2_zero), (0.0, None, None));
    }
}
