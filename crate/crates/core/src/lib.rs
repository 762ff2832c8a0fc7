//! Stochastic forest-fire cellular automaton with Monte-Carlo ensemble
//! statistics and probabilistic forecast verification.
//!
//! The crate is organised bottom-up:
//!
//! * [`engine`] runs single realizations of the automaton.
//! * [`ensemble`] builds ensembles sharing one initial condition and reduces
//!   them to per-cell burn frequencies and grid-level macrostate series.
//! * [`forecast`] produces probability maps (holdout oracles and baselines).
//! * [`metrics`] scores probability maps against binary outcomes.
//! * [`experiments`] wires the above into the evaluation studies.
//! * [`io`] holds the binary trace/statistic formats and CSV writers.

pub mod config;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod forecast;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod rng;

pub use config::{IgnitionRule, SeedPlacement, SimConfig};
pub use engine::{burnt_mask, init_grid, run_from, run_simulation, seed_fire, step, SimulationTrace};
pub use ensemble::{EnsembleSpec, MacroSeries, MicroStatMap};
pub use error::{Error, Result};
pub use forecast::{ForecastMap, RealizationId};
pub use grid::{BinaryGrid, CellState, GridFrame, StateGrid};
pub use metrics::MetricReport;
