use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// A photon-number (or count) distribution truncated at `n_max`, optionally carrying
/// a 1σ uncertainty per entry.
///
/// Total mass may fall short of 1 (truncated tails, measured fractions that do not add
/// up); [`PhotonDist::normalization_defect`] reports by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct PhotonDist {
    probs: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    n_max: usize,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<f64>>,
}

impl TryFrom<DistRepr> for PhotonDist {
    type Error = Error;

    fn try_from(r: DistRepr) -> Result<Self> {
        if r.probs.len() != r.n_max + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_max = {} but {} probabilities given",
                r.n_max,
                r.probs.len()
            )));
        }
        let d = PhotonDist::new(r.probs)?;
        match r.sigma {
            Some(s) => d.with_sigma(s),
            None => Ok(d),
        }
    }
}

impl From<PhotonDist> for DistRepr {
    fn from(d: PhotonDist) -> Self {
        DistRepr {
            n_max: d.n_max(),
            probs: d.probs,
            sigma: d.sigma,
        }
    }
}

impl PhotonDist {
    /// Validates finiteness, non-negativity (to tolerance, small negatives are clipped)
    /// and that the total does not exceed 1 beyond tolerance.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        if probs.is_empty() {
            return Err(Error::InvalidArgument("distribution needs at least one entry".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite probability at n={i}")));
        }
        let d = PhotonDist { probs, sigma: None }.clip_negative(tol.negative_mass)?;
        if d.total() > 1.0 + tol.normalization {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {} > 1",
                d.total()
            )));
        }
        Ok(d)
    }

    pub(crate) fn unchecked(probs: Vec<f64>) -> Self {
        PhotonDist { probs, sigma: None }
    }

    /// A point mass at `n` on 0..=n_max.
    pub fn number_state(n: usize, n_max: usize) -> Self {
        let mut probs = vec![0.0; n_max.max(n) + 1];
        probs[n] = 1.0;
        PhotonDist { probs, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != self.probs.len() {
            return Err(Error::InvalidArgument(format!(
                "sigma has {} entries, probs has {}",
                sigma.len(),
                self.probs.len()
            )));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument(
                "sigma entries must be finite and non-negative".into(),
            ));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    pub fn without_sigma(mut self) -> Self {
        self.sigma = None;
        self
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// P(n), zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability mass not represented in the truncation.
    pub fn remainder(&self) -> f64 {
        1.0 - self.total()
    }

    pub fn normalization_defect(&self) -> f64 {
        (self.total() - 1.0).abs()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.normalization_defect() <= tol
    }

    /// Largest n with non-zero probability.
    pub fn highest_nonzero(&self) -> usize {
        self.probs.iter().rposition(|&p| p != 0.0).unwrap_or(0)
    }

    /// Copy zero-padded (or cut, if the dropped entries are all zero) to `n_max`.
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        if n_max < self.highest_nonzero() {
            return Err(Error::InvalidArgument(format!(
                "n_max = {n_max} is below the highest populated entry {}",
                self.highest_nonzero()
            )));
        }
        let mut probs = self.probs.clone();
        probs.resize(n_max + 1, 0.0);
        Ok(PhotonDist { probs, sigma: None })
    }

    /// Clips entries in `[-tol, 0)` to zero; anything more negative is an error.
    pub fn clip_negative(mut self, tol: f64) -> Result<Self> {
        for (index, p) in self.probs.iter_mut().enumerate() {
            if *p < 0.0 {
                if *p < -tol {
                    return Err(Error::NegativeMass {
                        index,
                        value: *p,
                        tolerance: tol,
                    });
                }
                *p = 0.0;
            }
        }
        Ok(self)
    }

    /// Largest absolute difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &PhotonDist) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        (0..n).map(|i| (self.get(i) - other.get(i)).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(PhotonDist::new(vec![]).is_err());
        assert!(PhotonDist::new(vec![0.5, f64::NAN]).is_err());
        assert!(PhotonDist::new(vec![0.9, 0.2]).is_err());
        assert!(matches!(
            PhotonDist::new(vec![1.0, -1e-3]),
            Err(Error::NegativeMass { index: 1, .. })
        ));
    }

    #[test]
    fn clips_rounding_negatives() {
        let d = PhotonDist::new(vec![1.0, -1e-12]).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn json_shape() {
        let d = PhotonDist::new(vec![0.75, 0.25])
            .unwrap()
            .with_sigma(vec![0.0, 0.1])
            .unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"n_max":1,"probs":[0.75,0.25],"sigma":[0.0,0.1]}"#);
        let back: PhotonDist = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<PhotonDist>(r#"{"n_max":3,"probs":[1.0]}"#).is_err());
    }

    #[test]
    fn resize_and_remainder() {
        let d = PhotonDist::new(vec![0.9199, 0.0794, 0.0005]).unwrap();
        assert!((d.remainder() - 0.0002).abs() < 1e-12);
        assert_eq!(d.resized(4).unwrap().probs().len(), 5);
        assert!(d.resized(1).is_err());
        assert_eq!(d.highest_nonzero(), 2);
    }
}
