//! Gated SPDC single-photon source simulation and photon-counting statistics.
//!
//! The crate is split along the measurement chain:
//!
//! * [`source`] runs the discrete-event Monte Carlo of pair generation, control-arm
//!   heralding, shutter gating and the lossy signal path, one 100 µs window at a time.
//! * [`analyzer`] turns emitted photons into registered counts (efficiency budget,
//!   dark counts, counter dead time) and tallies them into a [`CountHistogram`].
//! * [`statkit`] holds the analysis mathematics: the binomial loss channel and its
//!   triangular inversion, dark and dead-time corrections, moment diagnostics,
//!   weak-coherent-light comparators and uncertainty propagation.
//! * [`pipeline`], [`config`] and [`report`] glue these into the end-to-end runs driven
//!   by the `gspdc` binary.
//!
//! Every random draw is keyed by `(master_seed, window_index, stream)` through [`rng`],
//! so results are independent of evaluation order and thread count.

pub mod analyzer;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod source;
pub mod statkit;
pub mod tolerances;

pub use analyzer::{AnalyzerParams, CountHistogram, EfficiencyStage};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use source::{GateInterval, PairEvent, SourceParams, WindowRecord};
pub use statkit::{EfficiencyBudget, PhotonDist};
pub use tolerances::Tolerances;
