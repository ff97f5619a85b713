//! Simulation and analysis of first-order rank-based ("Atlas") equity
//! market models.
//!
//! Each stock's log-capitalization grows at a rate and with a volatility
//! fixed by its current rank. The crate integrates the system
//! ([`engine`]), estimates its ergodic rank statistics ([`rankstats`]),
//! computes certainty-equivalent capital distributions ([`equilibrium`]),
//! evaluates rank-based portfolio rules ([`portfolio`]), and provides the
//! diversity functional and a weak-diversity bound ([`diversity`]) along with
//! calibration helpers ([`calibrate`]).
//!
//! Ranks and names are zero-based in vectors returned by this crate and
//! one-based in every file it writes.
//!
//! ```
//! use atlas_core::{ModelParams, SimConfig, Registrations, simulate, rankstats};
//!
//! let params = ModelParams::atlas(3, 1.0, 1.0)?;
//! let stats = simulate(&params, &SimConfig::new(50.0, 0.01), &Registrations::default())?;
//! let occ = rankstats::occupation_fractions(&stats)?;
//! assert!((occ[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! # Ok::<(), atlas_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod diversity;
pub mod engine;
pub mod equilibrium;
mod error;
pub mod exec;
pub mod model;
pub mod output;
pub mod portfolio;
pub mod rankstats;

pub use engine::{run_ensemble, simulate, step, Ensemble, MarketState, PathStats, Registrations, SimConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{rank, ModelParams, Ranking, ValidityReport};
pub use portfolio::PortfolioRule;
