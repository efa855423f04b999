//! Files, experiments and the command line for Kernel Rank Centrality.
//!
//! The estimators live in `krc_core`; this crate reads and writes CSV,
//! runs the simulation studies and the walk-forward backtest, and backs the
//! `krc` binary.

mod error;
pub mod cli;
pub mod experiments;
pub mod io;
pub mod stats;

pub use error::{Error, Result};
pub use krc_core;
