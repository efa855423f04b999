//! Kernel Rank Centrality: time-varying spectral ranking from timestamped
//! pairwise comparisons.
//!
//! The crate is `no_std` and only needs an allocator. Scores at a time `t`
//! are the stationary distribution of a kernel-smoothed comparison Markov
//! chain; [`online`] keeps that distribution and the chain's group inverse
//! current as new comparisons stream in, and [`inference`] turns the group
//! inverse and the asymptotic variance formulas into confidence intervals.
//!
//! File formats, the command line and the simulation experiments live in the
//! companion `krc` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod data;
mod error;
pub mod group_inverse;
pub mod inference;
pub mod kernel;
pub mod metrics;
pub mod normal;
pub mod online;
pub mod simulation;
pub mod spectral;

pub use baselines::{EloConfig, MMConfig};
pub use data::{ComparisonDataset, ComparisonRecord, DatasetBuilder, RosterPolicy, TimeEncoding};
pub use error::{KrcError, Result};
pub use group_inverse::GroupInverse;
pub use inference::{AsymptoticParams, IntervalEstimate};
pub use kernel::{Kernel, KernelFamily};
pub use metrics::MetricReport;
pub use online::{OnlineConfig, OnlineState};
pub use simulation::{GroundTruth, SimConfig, SkillFamily};
pub use spectral::{ScoreVector, SolverConfig, TransitionMatrix};
