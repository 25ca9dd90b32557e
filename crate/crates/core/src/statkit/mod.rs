//! Photon-number statistics: the binomial loss channel and its inversion, count
//! corrections, moment diagnostics, weak-coherent-light comparators and uncertainty
//! propagation. Everything here is a pure function of its inputs.

mod budget;
mod correct;
mod dist;
mod loss;
mod moments;
mod sweep;
mod uncertainty;
mod wcl;

pub use budget::{budget_effective, EfficiencyBudget, EfficiencyStage};
pub use correct::{dark_correct, deadtime_correct, merge_channel, poisson_convolve};
pub use dist::PhotonDist;
pub use loss::{binomial_pmf, forward_loss, invert_loss};
pub use moments::{fano, g2_zero, mean_photon, Diagnostics};
pub use sweep::{rate_sweep, RateRow};
pub use uncertainty::{
    propagate_eta_uncertainty, UncertaintyOptions, UncertaintyResult, MIN_SAMPLES as UNCERTAINTY_MIN_SAMPLES,
};
pub use wcl::{match_wcl_by_mean, match_wcl_by_p2, poisson_dist, poisson_pmf};
