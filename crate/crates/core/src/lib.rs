//! Design of renewable-plus-storage energy parks under uncertainty.
//!
//! The crate sizes wind, solar, and bulk storage capacities for an energy
//! park supplying a constant industrial load, using scenario-based
//! stochastic linear programming over sampled uncertainties in load,
//! generation patterns, and storage technology performance. On top of the
//! sizing optimizer it runs a two-stage Bayesian decision analysis: how
//! much would a storage demonstrator (which shrinks the performance
//! uncertainty) be worth, and how much extra value comes from keeping the
//! storage technology choice open until after the demonstrator reports.
//!
//! Module map:
//! - [`timeseries`]: hourly profile ingestion, validation, and synthesis
//! - [`uncertainty`]: truncated-Gaussian priors, measurement model, conjugate
//!   and MCMC posteriors
//! - [`scenario`]: joint scenario assembly, annualized costs, fast-forward
//!   scenario reduction
//! - [`optimizer`]: the sizing/dispatch LP, CVaR objective, solver backends,
//!   MPS export
//! - [`pipeline`]: prior design, pre-posterior analysis, value of
//!   information / optionality estimators, sensitivity sweeps
//! - [`config`] and [`cli`]: run configuration files and the `epark` command
//!   line

pub mod cli;
pub mod config;
pub mod error;
pub mod numfmt;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod timeseries;
pub mod uncertainty;

pub use error::{Error, Result};
